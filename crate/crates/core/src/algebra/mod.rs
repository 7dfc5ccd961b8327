//! Quaternion and dual quaternion algebra.
//!
//! Conventions used throughout the crate:
//!
//! * A quaternion `h = w + xî + yĵ + zk̂` is stored in coefficient order
//!   `(w, x, y, z)`; a dual quaternion `h + εh′` stacks the primary part
//!   before the dual part, so `vec8` order is `(w, x, y, z, w′, x′, y′, z′)`.
//! * A rigid motion with rotation `r` and translation `p` is the unit dual
//!   quaternion `x = r + ε(1/2)p·r`.
//! * Logarithms are canonicalized to the shortest arc: if the scalar part of
//!   the rotation is negative the dual quaternion is first multiplied by −1,
//!   which leaves the rigid motion unchanged and keeps the rotation angle in
//!   `[0, π]`.

mod dual;
mod quaternion;

pub use dual::{DualQuaternion, Matrix8, PureDualQuaternion, Twist, UnitDualQuaternion, Vector6, Vector8};
pub use quaternion::{PureQuaternion, Quaternion, UnitQuaternion};

/// Norm deviations at or below this bound are accepted without touching the
/// coefficients.
pub const UNIT_EXACT_TOL: f64 = 1e-12;

/// Norm deviations in `(UNIT_EXACT_TOL, UNIT_RENORM_TOL]` are silently
/// renormalized by the unit constructors; larger deviations are errors.
pub const UNIT_RENORM_TOL: f64 = 1e-6;

/// Residual real parts at or below this bound are stripped when a twist is
/// recovered from a dual quaternion product; larger residuals are errors.
pub const TWIST_PURITY_TOL: f64 = 1e-6;
