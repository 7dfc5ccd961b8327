//! Scenario description, validation, and generator families.
//!
//! A [`Scenario`] is a plain serializable document: communication graph,
//! per-agent initial state, formation reference, control law, and run
//! parameters. [`Scenario::compile`] cross-checks the pieces and produces the
//! runtime objects the simulator consumes. The `*_scenario` constructors
//! build the three stock families: a five-agent rigid circle, an `n`-agent
//! breathing circle with a time-varying reference, and a two-arm
//! box-carrying team led by a static virtual leader.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::algebra::{
    DualQuaternion, PureQuaternion, Quaternion, UnitDualQuaternion, UnitQuaternion,
};
use crate::graph::DirectedGraph;
use crate::kinematics::{whole_body_fk, ArmModel, DhRow};
use crate::{Error, Result};

/// Communication graph: `n` nodes and weighted directed edges
/// `(receiver, sender, weight)`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GraphSpec {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

/// Serial-arm description: standard DH rows `[theta, d, a, alpha]` plus the
/// constant mount pose on the base, as 8 pose coefficients.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ArmModelSpec {
    pub dh: Vec<[f64; 4]>,
    pub mount: [f64; 8],
}

/// Initial state of one agent. Poses are 8 coefficient arrays
/// `(w, x, y, z, w', x', y', z')`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AgentSpec {
    /// Fully actuated rigid body with pose state.
    Pose { pose: [f64; 8] },
    /// Static reference agent; receives no input.
    Leader { pose: [f64; 8] },
    /// Planar base `(x, y, yaw)` plus a serial arm.
    Manipulator {
        base: [f64; 3],
        joints: Vec<f64>,
        model: ArmModelSpec,
    },
}

/// Formation reference. `Constant` lists one relative pose per agent;
/// `TimeVaryingCircle` is the built-in breathing-circle reference.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FormationSpec {
    None,
    Constant { deltas: Vec<[f64; 8]> },
    TimeVaryingCircle,
}

/// Which control law drives the non-leader agents.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    PoseConsensus,
    TwistConsensus,
    Formation,
    TwistFormation,
    TimeVaryingFormation,
    ManipulatorFormation,
}

fn default_tol() -> f64 {
    1e-6
}

/// Complete simulation scenario; serializable as JSON.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Scenario {
    pub graph: GraphSpec,
    pub agents: Vec<AgentSpec>,
    pub formation: FormationSpec,
    pub protocol: ProtocolKind,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

/// Runtime agent state produced by [`Scenario::compile`].
#[derive(Clone, Debug)]
pub enum Agent {
    Pose { pose: UnitDualQuaternion },
    Leader { pose: UnitDualQuaternion },
    Manipulator {
        base: [f64; 3],
        joints: Vec<f64>,
        model: ArmModel,
    },
}

/// Formation reference in runtime form.
#[derive(Clone, Debug)]
pub enum Formation {
    /// One constant relative pose per agent (identity when unspecified).
    Constant(Vec<UnitDualQuaternion>),
    /// Breathing circle; deltas are a function of time.
    TimeVaryingCircle,
}

impl Formation {
    /// Relative poses and their time derivatives at time `t`.
    pub fn deltas_at(&self, n: usize, t: f64) -> Vec<(UnitDualQuaternion, DualQuaternion)> {
        match self {
            Self::Constant(deltas) => deltas
                .iter()
                .map(|d| (*d, DualQuaternion::ZERO))
                .collect(),
            Self::TimeVaryingCircle => time_varying_deltas(n, t),
        }
    }
}

/// Validated runtime view of a [`Scenario`].
#[derive(Clone, Debug)]
pub struct Compiled {
    pub graph: DirectedGraph,
    pub agents: Vec<Agent>,
    pub formation: Formation,
}

fn parse_pose(raw: &[f64; 8], what: &str) -> Result<UnitDualQuaternion> {
    UnitDualQuaternion::try_new(DualQuaternion::from_vec8(&crate::algebra::Vector8::from_column_slice(raw)))
        .map_err(|e| Error::Scenario(format!("{what}: {e}")))
}

impl ArmModelSpec {
    pub fn compile(&self) -> Result<ArmModel> {
        if self.dh.is_empty() {
            return Err(Error::Scenario("arm model needs at least one DH row".into()));
        }
        let rows = self
            .dh
            .iter()
            .map(|r| DhRow { theta: r[0], d: r[1], a: r[2], alpha: r[3] })
            .collect();
        let mount = parse_pose(&self.mount, "arm mount pose")?;
        Ok(ArmModel { rows, mount })
    }

    pub fn from_model(model: &ArmModel) -> Self {
        Self {
            dh: model
                .rows
                .iter()
                .map(|r| [r.theta, r.d, r.a, r.alpha])
                .collect(),
            mount: pose_array(&model.mount),
        }
    }
}

impl Scenario {
    /// Validate the document and build the runtime objects.
    pub fn compile(&self) -> Result<Compiled> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Scenario(format!("dt must be positive and finite, got {}", self.dt)));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(Error::Scenario(format!(
                "horizon must be finite and at least dt, got {}",
                self.horizon
            )));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Scenario(format!("tol must be positive, got {}", self.tol)));
        }
        let graph = DirectedGraph::new(self.graph.n, &self.graph.edges)?;
        if self.agents.len() != self.graph.n {
            return Err(Error::Scenario(format!(
                "graph has {} nodes but {} agents are defined",
                self.graph.n,
                self.agents.len()
            )));
        }

        let mut agents = Vec::with_capacity(self.agents.len());
        for (i, spec) in self.agents.iter().enumerate() {
            let agent = match spec {
                AgentSpec::Pose { pose } => Agent::Pose { pose: parse_pose(pose, &format!("agent {i} pose"))? },
                AgentSpec::Leader { pose } => Agent::Leader { pose: parse_pose(pose, &format!("agent {i} pose"))? },
                AgentSpec::Manipulator { base, joints, model } => {
                    let model = model.compile()?;
                    if joints.len() != model.dof() {
                        return Err(Error::Scenario(format!(
                            "agent {i}: {} joint values for a {}-DOF arm",
                            joints.len(),
                            model.dof()
                        )));
                    }
                    Agent::Manipulator { base: *base, joints: joints.clone(), model }
                }
            };
            agents.push(agent);
        }

        let manipulator_protocol = self.protocol == ProtocolKind::ManipulatorFormation;
        for (i, agent) in agents.iter().enumerate() {
            match agent {
                Agent::Manipulator { .. } if !manipulator_protocol => {
                    return Err(Error::Scenario(format!(
                        "agent {i} is a manipulator but the protocol is not manipulator-formation"
                    )));
                }
                Agent::Pose { .. } if manipulator_protocol => {
                    return Err(Error::Scenario(format!(
                        "agent {i} is a pose agent; manipulator-formation drives only manipulators and leaders"
                    )));
                }
                _ => {}
            }
        }

        let formation = match (&self.formation, self.protocol) {
            (FormationSpec::None, _) => {
                Formation::Constant(vec![UnitDualQuaternion::IDENTITY; self.agents.len()])
            }
            (FormationSpec::Constant { .. }, ProtocolKind::PoseConsensus | ProtocolKind::TwistConsensus)
            | (FormationSpec::TimeVaryingCircle, ProtocolKind::PoseConsensus | ProtocolKind::TwistConsensus) => {
                return Err(Error::Scenario(
                    "consensus protocols take no formation reference; use formation: none".into(),
                ));
            }
            (FormationSpec::Constant { deltas }, _) => {
                if deltas.len() != self.agents.len() {
                    return Err(Error::Scenario(format!(
                        "{} formation deltas for {} agents",
                        deltas.len(),
                        self.agents.len()
                    )));
                }
                let parsed: Result<Vec<_>> = deltas
                    .iter()
                    .enumerate()
                    .map(|(i, d)| parse_pose(d, &format!("formation delta {i}")))
                    .collect();
                Formation::Constant(parsed?)
            }
            (FormationSpec::TimeVaryingCircle, ProtocolKind::TimeVaryingFormation) => Formation::TimeVaryingCircle,
            (FormationSpec::TimeVaryingCircle, _) => {
                return Err(Error::Scenario(
                    "the time-varying-circle formation requires the time-varying-formation protocol".into(),
                ));
            }
        };

        Ok(Compiled { graph, agents, formation })
    }

    /// Number of integration steps `round(horizon / dt)`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// Pose coefficients as a plain array, for embedding in scenario documents.
pub fn pose_array(x: &UnitDualQuaternion) -> [f64; 8] {
    let v = x.vec8();
    let mut out = [0.0; 8];
    out.copy_from_slice(v.as_slice());
    out
}

/// Uniform random unit rotation axis.
fn random_axis<R: Rng>(rng: &mut R) -> nalgebra::Vector3<f64> {
    let z: f64 = rng.random_range(-1.0..1.0);
    let az: f64 = rng.random_range(0.0..TAU);
    let r = (1.0 - z * z).sqrt();
    nalgebra::Vector3::new(r * az.cos(), r * az.sin(), z)
}

/// Random pose with rotation angle in `[0, max_angle]` and translation
/// coordinates in `[-max_translation, max_translation]`.
pub fn random_pose<R: Rng>(rng: &mut R, max_angle: f64, max_translation: f64) -> UnitDualQuaternion {
    let angle = rng.random_range(0.0..max_angle);
    let rotation = UnitQuaternion::from_axis_angle(&random_axis(rng), angle);
    let p = PureQuaternion::new(
        rng.random_range(-max_translation..max_translation),
        rng.random_range(-max_translation..max_translation),
        rng.random_range(-max_translation..max_translation),
    );
    UnitDualQuaternion::from_rotation_translation(&rotation, &p)
}

/// Rigid circular formation: agent `i` sits at the center rotated by
/// `2πi/n` about the center z-axis and offset by `-0.5ĵ` in its own frame.
pub fn circular_formation_deltas(n: usize) -> Vec<UnitDualQuaternion> {
    let half_p = Quaternion::new(0.0, 0.0, -0.25, 0.0);
    (0..n)
        .map(|i| {
            let r = UnitQuaternion::from_axis_angle(&nalgebra::Vector3::z(), TAU * i as f64 / n as f64);
            let rq = *r.as_quaternion();
            UnitDualQuaternion::try_new(DualQuaternion::new(rq, rq * half_p))
                .expect("unit by construction")
        })
        .collect()
}

/// Breathing-circle reference: agent `i`'s slot is rotated by
/// `φ_i = 2πi/n` about the x- then z-axis, with a translation that
/// oscillates along `-î - ĵ` at 4 Hz. Returns `(δ_i(t), δ̇_i(t))`.
pub fn time_varying_deltas(n: usize, t: f64) -> Vec<(UnitDualQuaternion, DualQuaternion)> {
    let breathe = 2.0 + (8.0 * PI * t).cos();
    let breathe_dot = -8.0 * PI * (8.0 * PI * t).sin();
    let dir = Quaternion::new(0.0, -0.5, -0.5, 0.0);
    (0..n)
        .map(|i| {
            let phi = TAU * i as f64 / n as f64;
            let rx = UnitQuaternion::from_axis_angle(&nalgebra::Vector3::x(), phi);
            let rz = UnitQuaternion::from_axis_angle(&nalgebra::Vector3::z(), phi);
            let r = *(rx * rz).as_quaternion();
            let delta = UnitDualQuaternion::try_new(DualQuaternion::new(r, r * dir.scale(breathe)))
                .expect("unit by construction");
            let delta_dot = DualQuaternion::new(Quaternion::ZERO, r * dir.scale(breathe_dot));
            (delta, delta_dot)
        })
        .collect()
}

/// The five-node test topology: a two-node loop `0↔3` feeding chains
/// `0→1→2→4` and `3→4`, unit weights, algebraic connectivity 1.
pub fn five_node_topology() -> GraphSpec {
    GraphSpec {
        n: 5,
        edges: vec![
            (0, 3, 1.0),
            (3, 0, 1.0),
            (1, 0, 1.0),
            (2, 1, 1.0),
            (4, 2, 1.0),
            (4, 3, 1.0),
        ],
    }
}

/// Five-DOF arm in the 0.5 m class (standard DH), mounted 15 cm ahead of and
/// 20 cm above the base origin.
pub fn standard_arm() -> ArmModel {
    ArmModel {
        rows: vec![
            DhRow { theta: 0.0, d: 0.147, a: 0.033, alpha: PI / 2.0 },
            DhRow { theta: PI / 2.0, d: 0.0, a: 0.155, alpha: 0.0 },
            DhRow { theta: 0.0, d: 0.0, a: 0.135, alpha: 0.0 },
            DhRow { theta: PI / 2.0, d: 0.0, a: 0.0, alpha: PI / 2.0 },
            DhRow { theta: 0.0, d: 0.2175, a: 0.0, alpha: 0.0 },
        ],
        mount: UnitDualQuaternion::from_rotation_translation(
            &UnitQuaternion::IDENTITY,
            &PureQuaternion::new(0.15, 0.0, 0.2),
        ),
    }
}

/// Five-agent rigid-circle formation scenario on the five-node topology
/// (directed ring for other `n`), twist-level law, random initial poses.
pub fn circle_scenario(n: usize, seed: u64) -> Result<Scenario> {
    if n < 2 {
        return Err(Error::Scenario("circle scenario needs at least two agents".into()));
    }
    let rng = &mut ChaCha8Rng::seed_from_u64(seed);
    let graph = if n == 5 {
        five_node_topology()
    } else {
        GraphSpec {
            n,
            edges: (0..n).map(|i| (i, (i + n - 1) % n, 1.0)).collect(),
        }
    };
    let agents = (0..n)
        .map(|_| AgentSpec::Pose { pose: pose_array(&random_pose(rng, 2.6, 1.0)) })
        .collect();
    let deltas = circular_formation_deltas(n).iter().map(pose_array).collect();
    Ok(Scenario {
        graph,
        agents,
        formation: FormationSpec::Constant { deltas },
        protocol: ProtocolKind::TwistFormation,
        dt: 1e-3,
        horizon: 25.0,
        seed,
        tol: 1e-6,
    })
}

/// `n`-agent breathing-circle scenario on a complete weighted digraph.
/// Initial poses are the `t = 0` formation slots seen from per-agent random
/// centers, so the consensus transient is the only disturbance.
pub fn time_varying_scenario(n: usize, seed: u64) -> Result<Scenario> {
    if n < 2 {
        return Err(Error::Scenario("time-varying scenario needs at least two agents".into()));
    }
    let rng = &mut ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                edges.push((i, j, rng.random_range(0.3..0.7)));
            }
        }
    }
    let deltas0 = time_varying_deltas(n, 0.0);
    let agents = deltas0
        .iter()
        .map(|(delta, _)| {
            let center = random_pose(rng, 1.0, 1.0);
            AgentSpec::Pose { pose: pose_array(&(center * *delta)) }
        })
        .collect();
    Ok(Scenario {
        graph: GraphSpec { n, edges },
        agents,
        formation: FormationSpec::TimeVaryingCircle,
        protocol: ProtocolKind::TimeVaryingFormation,
        dt: 2e-5,
        horizon: 2.5,
        seed,
        tol: 1e-6,
    })
}

/// Relative poses for the two-arm box carry: effectors face each other
/// 0.30 m either side of the box center; the third agent is the center
/// itself.
pub fn box_formation_deltas() -> Vec<UnitDualQuaternion> {
    let d0 = UnitDualQuaternion::try_new(DualQuaternion::new(
        Quaternion::ONE,
        Quaternion::new(0.0, -0.15, 0.0, 0.0),
    ))
    .expect("unit by construction");
    let d1 = UnitDualQuaternion::try_new(DualQuaternion::new(
        Quaternion::new(0.0, 0.0, 0.0, 1.0),
        Quaternion::new(0.0, 0.0, -0.15, 0.0),
    ))
    .expect("unit by construction");
    vec![d0, d1, UnitDualQuaternion::IDENTITY]
}

/// Nominal arm posture used to anchor the box scenario: pitch angles sum to
/// zero so the tool z-axis is vertical and the two-arm geometry closes
/// exactly under a half-turn about the box center.
pub const BOX_NOMINAL_JOINTS: [f64; 5] = [0.0, -1.35, 0.35, 1.0, 0.0];

/// Two mobile manipulators carrying a 0.6 m box slot-to-slot, coordinated
/// through a static leader that publishes the box-center pose. The leader
/// pose is the nominal arm-0 effector pose composed with its slot offset, so
/// both slots are exactly reachable.
pub fn manipulator_box_scenario() -> Scenario {
    let model = standard_arm();
    let base0 = [0.45, 0.0, PI];
    let x_e0 = whole_body_fk(&base0, &model, &BOX_NOMINAL_JOINTS);
    let deltas = box_formation_deltas();
    let center = x_e0 * deltas[0].conj();
    let c = center.translation();

    // Mirror base 0 by a half-turn about the vertical axis through the box
    // center; with a vertical tool axis this maps slot 0 exactly onto slot 1.
    let base1 = [2.0 * c.x - base0[0], 2.0 * c.y - base0[1], base0[2] + PI];

    let perturb0 = [0.15, -0.2, 0.25, -0.1, 0.2];
    let perturb1 = [-0.1, 0.15, -0.2, 0.2, -0.15];
    let joints0: Vec<f64> = BOX_NOMINAL_JOINTS.iter().zip(perturb0).map(|(q, p)| q + p).collect();
    let joints1: Vec<f64> = BOX_NOMINAL_JOINTS.iter().zip(perturb1).map(|(q, p)| q + p).collect();
    let model_spec = ArmModelSpec::from_model(&model);

    Scenario {
        graph: GraphSpec {
            n: 3,
            edges: vec![(0, 1, 0.5), (0, 2, 0.5), (1, 0, 0.5)],
        },
        agents: vec![
            AgentSpec::Manipulator {
                base: [base0[0] - 0.06, base0[1] + 0.09, base0[2] + 0.12],
                joints: joints0,
                model: model_spec.clone(),
            },
            AgentSpec::Manipulator {
                base: [base1[0] + 0.05, base1[1] - 0.07, base1[2] - 0.1],
                joints: joints1,
                model: model_spec,
            },
            AgentSpec::Leader { pose: pose_array(&center) },
        ],
        formation: FormationSpec::Constant {
            deltas: deltas.iter().map(pose_array).collect(),
        },
        protocol: ProtocolKind::ManipulatorFormation,
        dt: 1e-3,
        horizon: 60.0,
        seed: 0,
        tol: 1e-6,
    }
}
