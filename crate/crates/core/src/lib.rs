//! Dual quaternion pose consensus and decentralized formation control.
//!
//! The crate models rigid-body poses as unit dual quaternions and drives
//! networks of agents toward pose consensus or prescribed formations using
//! only locally exchanged logarithm outputs. The building blocks are:
//!
//! * [`algebra`] — quaternion / dual quaternion arithmetic, Hamilton
//!   operators, the exponential and logarithmic maps, twists.
//! * [`logmap`] — the Jacobian of the logarithm (the `Q` and `Q₈` matrices)
//!   that links pose derivatives to log-space derivatives.
//! * [`graph`] — weighted digraphs, Laplacians and the spanning-tree
//!   eigenvalue test that decides whether consensus is reachable.
//! * [`protocols`] — the distributed control laws (output, pose and twist
//!   consensus; constant and time-varying formations; mobile manipulators).
//! * [`kinematics`] — mobile-manipulator forward kinematics and Jacobians in
//!   dual quaternion form.
//! * [`sim`] / [`scenario`] — a deterministic scenario-driven simulator with
//!   CSV trajectory output.

pub mod algebra;
pub mod graph;
pub mod kinematics;
pub mod logmap;
pub mod protocols;
pub mod scenario;
pub mod sim;

/// Crate-wide error type.
///
/// Construction errors (`NotUnit*`, `Graph`, `Scenario`, `TreeTransformSize`)
/// indicate invalid inputs; the remaining variants indicate numerical
/// failures detected at run time.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Quaternion norm deviates from 1 beyond the renormalization band.
    #[error("quaternion norm deviates from unity by {deviation:.3e}")]
    NotUnit { deviation: f64 },
    /// Dual quaternion norm deviates from 1 + ε0 beyond the renormalization band.
    #[error("dual quaternion norm deviates from unity by ({real:.3e}, {dual:.3e})")]
    NotUnitDual { real: f64, dual: f64 },
    /// A value that must be a twist (pure dual quaternion) has real parts.
    #[error("twist real parts exceed purity tolerance: ({real:.3e}, {dual:.3e})")]
    ImpureTwist { real: f64, dual: f64 },
    /// The log-map Jacobian is numerically singular (rotation angle near 2π).
    #[error("log mapping is ill-conditioned: cond(QᵀQ) ≈ {cond:.3e}")]
    SingularMapping { cond: f64 },
    /// Malformed graph description.
    #[error("graph: {0}")]
    Graph(String),
    /// Tree transforms need at least two nodes.
    #[error("tree transform requires at least two nodes, got {0}")]
    TreeTransformSize(usize),
    /// Random graph generation exhausted its retry budget.
    #[error("no spanning-tree graph found after {0} attempts")]
    RetryLimit(usize),
    /// Malformed or inconsistent scenario description.
    #[error("scenario: {0}")]
    Scenario(String),
    /// Invalid runtime configuration (e.g. thread pool setup).
    #[error("configuration: {0}")]
    Config(String),
    /// Generic numerical failure during simulation.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
