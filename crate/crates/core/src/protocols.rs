//! Distributed consensus and formation control laws.
//!
//! Every law is local: agent `i` combines its own state with the weighted
//! log-space outputs `y_j` received from its in-neighbors into the
//! disagreement sum `s_i = Σ_j a_ij·vec6(y_i − y_j)` and maps `−s_i` back to
//! its actuation space. The `Q₈` factor makes the closed loop evolve as the
//! linear consensus system `ẏ_i = −Σ_j a_ij(y_i − y_j)` in log coordinates,
//! so convergence is decided by the communication graph alone (directed
//! spanning tree), not by the pose nonlinearity.
//!
//! Sign handling: logs are taken at the canonical (shortest-arc)
//! representative of `x_i·δ_i*`. The pose-derivative laws return the
//! derivative of the caller's stored representative, so the conversion
//! `ξ = 2·u·x*` is valid with the stored pose as-is.

use nalgebra::DVector;

use crate::algebra::{DualQuaternion, PureDualQuaternion, Twist, UnitDualQuaternion, Vector6, Vector8};
use crate::kinematics::{pseudo_inverse, whole_body_fk, whole_body_jacobian, ArmModel};
use crate::logmap::q8;
use crate::Result;

/// Weighted in-neighbor outputs `(a_ij, y_j)` for one agent.
pub type NeighborOutputs<'a> = &'a [(f64, PureDualQuaternion)];

/// Actuation-space command produced by a control law.
#[derive(Clone, Debug)]
pub enum ControlInput {
    /// `u = ẋ` as 8 coefficients; tangent to the unit manifold at the pose.
    PoseDerivative(Vector8),
    /// Body twist `ξ` with `ẋ = (1/2)ξx`.
    Twist(Twist),
    /// Generalized joint rates `(ẋ_b, ẏ_b, φ̇_b, q̇₁, …)`.
    JointVelocity(DVector<f64>),
}

impl ControlInput {
    /// Euclidean norm of the underlying coefficient vector.
    pub fn norm(&self) -> f64 {
        match self {
            Self::PoseDerivative(u) => u.norm(),
            Self::Twist(xi) => xi.norm(),
            Self::JointVelocity(q) => q.norm(),
        }
    }
}

/// `Σ_j a_ij·vec6(y_i − y_j)`.
fn disagreement_sum(y_i: &PureDualQuaternion, neighbors: NeighborOutputs) -> Vector6 {
    let yi = y_i.vec6();
    let mut s = Vector6::zeros();
    for (weight, y_j) in neighbors {
        s += (yi - y_j.vec6()) * *weight;
    }
    s
}

/// Log output for consensus: `y = log x`.
pub fn consensus_output(x: &UnitDualQuaternion) -> PureDualQuaternion {
    x.log()
}

/// Log output for formation keeping: `y = log(x·δ*)`, the log of the body's
/// estimate of the formation center.
pub fn formation_output(x: &UnitDualQuaternion, delta: &UnitDualQuaternion) -> PureDualQuaternion {
    (*x * delta.conj()).log()
}

/// First-order output consensus `u_i = −Σ_j a_ij(y_i − y_j)` for agents with
/// integrator dynamics `ẏ_i = u_i`.
pub fn output_consensus_input(y_i: &PureDualQuaternion, neighbors: NeighborOutputs) -> PureDualQuaternion {
    PureDualQuaternion::from_vec6(&(-disagreement_sum(y_i, neighbors)))
}

/// Pose consensus: `vec8(u_i) = −Q₈(x_i)·Σ_j a_ij·vec6(y_i − y_j)` with
/// `y = log x`.
pub fn pose_consensus_input(x: &UnitDualQuaternion, neighbors: NeighborOutputs) -> ControlInput {
    formation_input(x, &UnitDualQuaternion::IDENTITY, neighbors)
}

/// Twist-level pose consensus: `vec8(ξ_i) = −2H⁻₈(x_i*)Q₈(x_i)·s_i`.
pub fn twist_consensus_input(x: &UnitDualQuaternion, neighbors: NeighborOutputs) -> Result<ControlInput> {
    twist_formation_input(x, &UnitDualQuaternion::IDENTITY, neighbors)
}

/// Constant-formation law
/// `vec8(u_i) = −H⁻₈(δ_i)·Q₈(x_{c,i})·Σ_j a_ij·vec6(y_{c,i} − y_{c,j})`
/// with center estimate `x_{c,i} = x_i·δ_i*` and `y_c = log x_c`.
/// With `δ_i = 1` this is exactly pose consensus.
pub fn formation_input(
    x: &UnitDualQuaternion,
    delta: &UnitDualQuaternion,
    neighbors: NeighborOutputs,
) -> ControlInput {
    let (xc, sign) = (*x * delta.conj()).canonical_with_sign();
    let s = disagreement_sum(&xc.log(), neighbors);
    let u = delta.as_dual_quaternion().hamilton_minus() * (q8(&xc) * s);
    ControlInput::PoseDerivative(u * (-sign))
}

/// Twist-level formation law
/// `vec8(ξ_i) = −2H⁻₈(x_{c,i}*)Q₈(x_{c,i})·s_i` (using
/// `H⁻₈(x*)H⁻₈(δ) = H⁻₈(x_c*)`); the twist is invariant under the sign of
/// the pose representative.
pub fn twist_formation_input(
    x: &UnitDualQuaternion,
    delta: &UnitDualQuaternion,
    neighbors: NeighborOutputs,
) -> Result<ControlInput> {
    let (xc, _) = (*x * delta.conj()).canonical_with_sign();
    let s = disagreement_sum(&xc.log(), neighbors);
    let xi8 = xc.conj().as_dual_quaternion().hamilton_minus() * (q8(&xc) * s) * -2.0;
    let xi = Twist::try_from_dual(&DualQuaternion::from_vec8(&xi8))?;
    Ok(ControlInput::Twist(xi))
}

/// Time-varying formation law: the constant-formation feedback plus the
/// feed-forward `−vec8(x_i·δ̇_i*·δ_i)` that tracks the moving reference.
/// With `δ̇ = 0` it reduces to [`formation_input`].
pub fn time_varying_formation_input(
    x: &UnitDualQuaternion,
    delta: &UnitDualQuaternion,
    delta_dot: &DualQuaternion,
    neighbors: NeighborOutputs,
) -> ControlInput {
    let (xc, sign) = (*x * delta.conj()).canonical_with_sign();
    let s = disagreement_sum(&xc.log(), neighbors);
    let fb = delta.as_dual_quaternion().hamilton_minus() * (q8(&xc) * s) * (-sign);
    let ff = *x.as_dual_quaternion() * delta_dot.conj() * *delta.as_dual_quaternion();
    ControlInput::PoseDerivative(fb - ff.vec8())
}

/// Joint-space command for a mobile manipulator tracking a formation slot.
#[derive(Clone, Debug)]
pub struct ManipulatorCommand {
    pub joint_velocity: DVector<f64>,
    /// `‖J_w·q̇ − u_x‖`: nonzero residual means the task derivative left the
    /// range of the whole-body Jacobian (kinematic deficiency).
    pub range_residual: f64,
}

/// Mobile-manipulator formation law `q̇ = J_w†·vec8(u_x)` where `u_x` is the
/// constant-formation law evaluated at the end-effector pose.
pub fn manipulator_formation_input(
    base: &[f64; 3],
    joints: &[f64],
    model: &ArmModel,
    delta: &UnitDualQuaternion,
    neighbors: NeighborOutputs,
) -> ManipulatorCommand {
    let x_e = whole_body_fk(base, model, joints);
    let u = match formation_input(&x_e, delta, neighbors) {
        ControlInput::PoseDerivative(u) => u,
        _ => unreachable!("formation_input returns a pose derivative"),
    };
    let jw = whole_body_jacobian(base, model, joints);
    let u_dyn = DVector::from_column_slice(u.as_slice());
    let joint_velocity = pseudo_inverse(&jw) * &u_dyn;
    let range_residual = (&jw * &joint_velocity - u_dyn).norm();
    ManipulatorCommand { joint_velocity, range_residual }
}
