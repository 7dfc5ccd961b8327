//! Synchronous fixed-step closed-loop simulator.
//!
//! Each step evaluates every agent's log output from the current states,
//! feeds the weighted neighbor outputs to the agent's control law, and
//! integrates: pose agents move along the exponential of their commanded
//! twist (so states stay on the unit manifold for arbitrarily long runs),
//! manipulators integrate joint rates in configuration space, leaders stand
//! still. All agents update simultaneously from the same snapshot, so runs
//! are deterministic regardless of thread count.

use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

use crate::algebra::{DualQuaternion, PureDualQuaternion, Twist, UnitDualQuaternion, Vector6};
use crate::protocols::{
    formation_input, manipulator_formation_input, time_varying_formation_input,
    twist_formation_input, ControlInput,
};
use crate::scenario::{Agent, ProtocolKind, Scenario};
use crate::{Error, Result};

/// Number of agents at which input evaluation switches to the thread pool.
const PARALLEL_THRESHOLD: usize = 16;

/// Cap the global worker pool used for large teams. Call once, before the
/// first simulation; later calls fail because the pool is already built.
pub fn limit_threads(num_threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(num_threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Move a pose one step along a constant twist: `x ← exp((dt/2)ξ)·x`.
pub fn integrate_step(x: &UnitDualQuaternion, xi: &Twist, dt: f64) -> UnitDualQuaternion {
    (*xi.as_pure() * (0.5 * dt)).exp() * *x
}

/// Snapshot of the whole team after one step.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub t: f64,
    /// Controlled pose per agent (end-effector pose for manipulators).
    pub poses: Vec<UnitDualQuaternion>,
    /// Log outputs `y_i = log(x_i·δ_i*)` the agents exchange.
    pub outputs: Vec<PureDualQuaternion>,
    pub input_norms: Vec<f64>,
    /// Max over agents of the ∞-norm deviation of `vec6(y_i)` from the mean.
    pub disagreement: f64,
}

/// Full simulation history plus run bookkeeping.
#[derive(Clone, Debug)]
pub struct TrajectoryLog {
    pub records: Vec<StepRecord>,
    pub dt: f64,
    pub tol: f64,
    /// Largest `‖J_w·q̇ − u_x‖` seen across manipulators and steps.
    pub max_range_residual: f64,
}

/// Summary statistics for a finished run.
#[derive(Clone, Debug, Serialize)]
pub struct Metrics {
    pub final_disagreement: f64,
    /// First time the disagreement dropped below the scenario tolerance.
    pub time_to_tol: Option<f64>,
    pub steps: usize,
}

enum Command {
    Hold,
    Move(Twist),
    Joints(nalgebra::DVector<f64>),
}

fn current_pose(agent: &Agent) -> UnitDualQuaternion {
    match agent {
        Agent::Pose { pose } | Agent::Leader { pose } => *pose,
        Agent::Manipulator { base, joints, model } => {
            crate::kinematics::whole_body_fk(base, model, joints)
        }
    }
}

/// Team disagreement: the largest ∞-norm deviation of any output from the
/// across-team mean. Zero exactly when all outputs coincide.
pub fn disagreement(outputs: &[PureDualQuaternion]) -> f64 {
    let n = outputs.len() as f64;
    let mean: Vector6 = outputs.iter().map(|y| y.vec6()).sum::<Vector6>() / n;
    outputs
        .iter()
        .map(|y| (y.vec6() - mean).amax())
        .fold(0.0, f64::max)
}

struct Evaluated {
    input_norm: f64,
    range_residual: f64,
    command: Command,
}

fn agent_input(
    protocol: ProtocolKind,
    agent: &Agent,
    delta: &UnitDualQuaternion,
    delta_dot: &DualQuaternion,
    neighbors: &[(f64, PureDualQuaternion)],
) -> Result<Evaluated> {
    match agent {
        Agent::Leader { .. } => Ok(Evaluated { input_norm: 0.0, range_residual: 0.0, command: Command::Hold }),
        Agent::Pose { pose } => {
            let input = match protocol {
                ProtocolKind::PoseConsensus | ProtocolKind::Formation => {
                    formation_input(pose, delta, neighbors)
                }
                ProtocolKind::TwistConsensus | ProtocolKind::TwistFormation => {
                    twist_formation_input(pose, delta, neighbors)?
                }
                ProtocolKind::TimeVaryingFormation => {
                    time_varying_formation_input(pose, delta, delta_dot, neighbors)
                }
                ProtocolKind::ManipulatorFormation => unreachable!("rejected at compile"),
            };
            let input_norm = input.norm();
            let xi = match input {
                ControlInput::Twist(xi) => xi,
                ControlInput::PoseDerivative(u) => {
                    // ξ = 2·u·x*; the law differentiates the stored
                    // representative, so no sign bookkeeping is needed here.
                    let xi8 = DualQuaternion::from_vec8(&u) * pose.conj().as_dual_quaternion().clone();
                    Twist::try_from_dual(&(xi8 * 2.0))?
                }
                ControlInput::JointVelocity(_) => unreachable!("pose laws return pose-space inputs"),
            };
            Ok(Evaluated { input_norm, range_residual: 0.0, command: Command::Move(xi) })
        }
        Agent::Manipulator { base, joints, model } => {
            let command = manipulator_formation_input(base, joints, model, delta, neighbors);
            Ok(Evaluated {
                input_norm: command.joint_velocity.norm(),
                range_residual: command.range_residual,
                command: Command::Joints(command.joint_velocity),
            })
        }
    }
}

/// Run a scenario to completion and return the full trajectory.
pub fn run(scenario: &Scenario) -> Result<TrajectoryLog> {
    let compiled = scenario.compile()?;
    let mut agents = compiled.agents;
    let graph = compiled.graph;
    let formation = compiled.formation;
    let n = agents.len();
    let dt = scenario.dt;
    let steps = scenario.steps();
    let in_neighbors: Vec<Vec<(usize, f64)>> = (0..n).map(|i| graph.neighbors(i)).collect();

    let mut records = Vec::with_capacity(steps + 1);
    let mut max_range_residual: f64 = 0.0;

    for step in 0..=steps {
        let t = step as f64 * dt;
        let deltas = formation.deltas_at(n, t);
        let poses: Vec<UnitDualQuaternion> = agents.iter().map(current_pose).collect();
        let outputs: Vec<PureDualQuaternion> = poses
            .iter()
            .zip(&deltas)
            .map(|(x, (d, _))| (*x * d.conj()).log())
            .collect();

        let evaluate = |i: usize| -> Result<Evaluated> {
            let received: Vec<(f64, PureDualQuaternion)> = in_neighbors[i]
                .iter()
                .map(|&(j, w)| (w, outputs[j]))
                .collect();
            agent_input(scenario.protocol, &agents[i], &deltas[i].0, &deltas[i].1, &received)
        };
        let results: Vec<Evaluated> = if n >= PARALLEL_THRESHOLD {
            (0..n).into_par_iter().map(evaluate).collect::<Result<_>>()?
        } else {
            (0..n).map(evaluate).collect::<Result<_>>()?
        };

        let mut input_norms = Vec::with_capacity(n);
        let mut commands = Vec::with_capacity(n);
        for evaluated in results {
            max_range_residual = max_range_residual.max(evaluated.range_residual);
            input_norms.push(evaluated.input_norm);
            commands.push(evaluated.command);
        }

        let spread = disagreement(&outputs);
        records.push(StepRecord { t, poses, outputs, input_norms, disagreement: spread });
        if step == steps {
            break;
        }

        for (i, (agent, command)) in agents.iter_mut().zip(commands).enumerate() {
            match (agent, command) {
                (_, Command::Hold) => {}
                (Agent::Pose { pose }, Command::Move(xi)) => {
                    let next = integrate_step(pose, &xi, dt);
                    if !next.vec8().iter().all(|c| c.is_finite()) {
                        return Err(Error::Numerical(format!(
                            "agent {i} left the unit manifold at t = {t:.6}"
                        )));
                    }
                    *pose = next;
                }
                (Agent::Manipulator { base, joints, .. }, Command::Joints(qdot)) => {
                    for (k, b) in base.iter_mut().enumerate() {
                        *b += dt * qdot[k];
                    }
                    for (k, q) in joints.iter_mut().enumerate() {
                        *q += dt * qdot[3 + k];
                    }
                    if !base.iter().chain(joints.iter()).all(|c| c.is_finite()) {
                        return Err(Error::Numerical(format!(
                            "agent {i} configuration diverged at t = {t:.6}"
                        )));
                    }
                }
                _ => unreachable!("command kind matches agent kind"),
            }
        }
    }

    Ok(TrajectoryLog { records, dt, tol: scenario.tol, max_range_residual })
}

impl TrajectoryLog {
    /// Summary statistics: final disagreement, first crossing of `tol`,
    /// number of integration steps.
    pub fn metrics(&self) -> Metrics {
        let final_disagreement = self.records.last().map_or(0.0, |r| r.disagreement);
        let time_to_tol = self
            .records
            .iter()
            .find(|r| r.disagreement <= self.tol)
            .map(|r| r.t);
        Metrics {
            final_disagreement,
            time_to_tol,
            steps: self.records.len().saturating_sub(1),
        }
    }

    /// Write the trajectory as CSV: one row per agent per step, floats with
    /// 17 significant digits so values round-trip exactly.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "t,agent,x1,x2,x3,x4,x5,x6,x7,x8,y1,y2,y3,y4,y5,y6,u_norm"
        )?;
        for record in &self.records {
            for (i, pose) in record.poses.iter().enumerate() {
                write!(out, "{:.16e},{i}", record.t)?;
                for c in pose.vec8().iter() {
                    write!(out, ",{c:.16e}")?;
                }
                for c in record.outputs[i].vec6().iter() {
                    write!(out, ",{c:.16e}")?;
                }
                writeln!(out, ",{:.16e}", record.input_norms[i])?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::PureQuaternion;
    use crate::scenario::{
        circle_scenario, manipulator_box_scenario, pose_array, random_pose, AgentSpec,
        FormationSpec, GraphSpec,
    };
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn constant_twist_integrates_to_closed_form() {
        // ξ = (π/2)k̂ for one second in 1000 steps is a quarter turn.
        let xi = Twist::new(PureDualQuaternion::new(
            PureQuaternion::new(0.0, 0.0, PI / 2.0),
            PureQuaternion::ZERO,
        ));
        let mut x = UnitDualQuaternion::IDENTITY;
        let dt = 1e-3;
        for _ in 0..1000 {
            x = integrate_step(&x, &xi, dt);
        }
        assert_abs_diff_eq!(x.rotation().angle(), PI / 2.0, epsilon = 1e-12);
        let axis_z = x.rotation().as_quaternion().z;
        assert!(axis_z > 0.0);
        assert_abs_diff_eq!(x.translation().norm(), 0.0, epsilon = 1e-12);
    }

    fn two_agent_scenario(protocol: ProtocolKind) -> Scenario {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_pose(&mut rng, 1.5, 1.0);
        let b = random_pose(&mut rng, 1.5, 1.0);
        Scenario {
            graph: GraphSpec { n: 2, edges: vec![(0, 1, 1.0), (1, 0, 1.0)] },
            agents: vec![
                AgentSpec::Pose { pose: pose_array(&a) },
                AgentSpec::Pose { pose: pose_array(&b) },
            ],
            formation: FormationSpec::None,
            protocol,
            dt: 1e-3,
            horizon: 12.0,
            seed: 11,
            tol: 1e-9,
        }
    }

    #[test]
    fn two_agents_reach_pose_consensus() {
        for protocol in [ProtocolKind::PoseConsensus, ProtocolKind::TwistConsensus] {
            let log = run(&two_agent_scenario(protocol)).unwrap();
            let m = log.metrics();
            assert!(m.final_disagreement < 1e-9, "{protocol:?}: {}", m.final_disagreement);
            assert!(m.time_to_tol.is_some());
            let last = log.records.last().unwrap();
            let gap = (last.poses[0].conj() * last.poses[1]).canonicalized().log();
            assert!(gap.norm() < 1e-8, "{protocol:?}: pose gap {}", gap.norm());
        }
    }

    #[test]
    fn log_disagreement_decays_at_the_laplacian_rate() {
        // Symmetric two-agent consensus: z = y₀ − y₁ obeys ż = −2z, so after
        // t seconds ‖z‖ shrinks by e^{-2t} (up to O(dt) integration error).
        let scenario = Scenario { horizon: 1.0, dt: 1e-4, ..two_agent_scenario(ProtocolKind::PoseConsensus) };
        let log = run(&scenario).unwrap();
        let z0 = (log.records.first().unwrap().outputs[0].vec6()
            - log.records.first().unwrap().outputs[1].vec6())
        .norm();
        let z1 = (log.records.last().unwrap().outputs[0].vec6()
            - log.records.last().unwrap().outputs[1].vec6())
        .norm();
        let predicted = z0 * (-2.0f64).exp();
        assert!(
            (z1 - predicted).abs() <= 2e-4 * z0,
            "z0 {z0}, z1 {z1}, predicted {predicted}"
        );
    }

    #[test]
    fn leader_is_static_and_followers_adopt_its_pose() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let leader = random_pose(&mut rng, 2.0, 1.0);
        let scenario = Scenario {
            graph: GraphSpec { n: 3, edges: vec![(1, 0, 1.0), (2, 1, 1.0)] },
            agents: vec![
                AgentSpec::Leader { pose: pose_array(&leader) },
                AgentSpec::Pose { pose: pose_array(&random_pose(&mut rng, 2.0, 1.0)) },
                AgentSpec::Pose { pose: pose_array(&random_pose(&mut rng, 2.0, 1.0)) },
            ],
            formation: FormationSpec::None,
            protocol: ProtocolKind::PoseConsensus,
            dt: 1e-3,
            horizon: 20.0,
            seed: 21,
            tol: 1e-8,
        };
        let log = run(&scenario).unwrap();
        let last = log.records.last().unwrap();
        assert_eq!(last.poses[0].vec8(), leader.vec8());
        for i in 1..3 {
            let gap = (last.poses[i].conj() * leader).canonicalized().log();
            assert!(gap.norm() < 1e-7, "agent {i}: {}", gap.norm());
        }
    }

    #[test]
    fn record_count_matches_steps() {
        let mut scenario = circle_scenario(5, 5).unwrap();
        scenario.horizon = 0.25;
        let log = run(&scenario).unwrap();
        assert_eq!(log.records.len(), 251);
        assert_eq!(log.metrics().steps, 250);
        assert_abs_diff_eq!(log.records.last().unwrap().t, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn csv_output_is_deterministic_and_well_formed() {
        let mut scenario = circle_scenario(5, 5).unwrap();
        scenario.horizon = 0.1;
        let mut first = Vec::new();
        run(&scenario).unwrap().write_csv(&mut first).unwrap();
        let mut second = Vec::new();
        run(&scenario).unwrap().write_csv(&mut second).unwrap();
        assert_eq!(first, second);
        let text = String::from_utf8(first).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,agent,x1,x2,x3,x4,x5,x6,x7,x8,y1,y2,y3,y4,y5,y6,u_norm"
        );
        assert_eq!(text.lines().count(), 1 + 101 * 5);
        let sample = text.lines().nth(1).unwrap();
        assert_eq!(sample.split(',').count(), 17);
    }

    #[test]
    fn manipulator_box_run_converges_and_stays_in_range() {
        let mut scenario = manipulator_box_scenario();
        scenario.horizon = 8.0;
        let log = run(&scenario).unwrap();
        let first = log.records.first().unwrap().disagreement;
        let last = log.records.last().unwrap().disagreement;
        assert!(last < first * 0.3, "no decay: {first} -> {last}");
        assert!(
            log.max_range_residual < 1e-6,
            "range residual {}",
            log.max_range_residual
        );
    }
}
