//! Jacobian of the dual quaternion logarithm.
//!
//! With `y = log x` the coefficient dynamics satisfy
//! `vec8(ẋ) = Q₈(x)·vec6(ẏ)`. The rotation block `Q(r)` is available in two
//! algebraically equivalent forms: a direct differentiation of the
//! exponential ([`q_matrix_lemma_form`], kept as a cross-check) and the
//! closed form in terms of the rotation coefficients ([`q_matrix_theorem_form`]), which is
//! what the control laws use. `Q₈` is injective for rotation angles below 2π,
//! so the left pseudoinverse [`q8_pinv`] satisfies `Q₈⁺Q₈ = I₆` and recovers
//! log-space derivatives from pose derivatives.

use nalgebra::{Matrix4x3, SMatrix};

use crate::algebra::{PureQuaternion, UnitDualQuaternion, UnitQuaternion};
use crate::{Error, Result};

pub type Matrix8x6 = SMatrix<f64, 8, 6>;
pub type Matrix6x8 = SMatrix<f64, 6, 8>;
pub type Matrix6 = SMatrix<f64, 6, 6>;

/// Condition-number bound on `Q₈ᵀQ₈` beyond which the mapping is reported
/// singular (the rotation angle is too close to 2π).
pub const SINGULAR_COND_BOUND: f64 = 1e12;

/// Rotation block of the log-map Jacobian together with the scalars that
/// parameterize it.
#[derive(Clone, Debug)]
pub struct QMatrix {
    pub matrix: Matrix4x3<f64>,
    /// `Θ = sin(φ/2)/(φ/2)`, the determinant root: `det(QᵀQ) = Θ⁴`.
    pub theta: f64,
    /// `Γ = r₁ − Θ` where `r₁` is the scalar part of the rotation.
    pub gamma: f64,
}

/// `Θ(φ) = sin(φ/2)/(φ/2)`, continued by its series through `φ = 0`.
fn theta(phi: f64) -> f64 {
    let h = phi / 2.0;
    if phi > 1e-6 {
        h.sin() / h
    } else {
        1.0 - h * h / 6.0
    }
}

/// Closed form of `Q(r)` in terms of the rotation coefficients: first row
/// `(−r₂, −r₃, −r₄)`, lower block `Γ·nnᵀ + Θ·I₃`.
pub fn q_matrix_theorem_form(r: &UnitQuaternion) -> QMatrix {
    let q = r.as_quaternion();
    let im = q.im();
    let im_norm = im.norm();
    let phi = 2.0 * im_norm.atan2(q.w);
    let theta = theta(phi);
    let gamma = q.w - theta;
    // At φ = 0 the axis is undefined but Γ = 0 makes the nnᵀ term vanish.
    let n = if im_norm > 1e-12 { im.scale(1.0 / im_norm) } else { PureQuaternion::ZERO };
    let matrix = Matrix4x3::new(
        -q.x,
        -q.y,
        -q.z,
        gamma * n.x * n.x + theta,
        gamma * n.x * n.y,
        gamma * n.x * n.z,
        gamma * n.y * n.x,
        gamma * n.y * n.y + theta,
        gamma * n.y * n.z,
        gamma * n.z * n.x,
        gamma * n.z * n.y,
        gamma * n.z * n.z + theta,
    );
    QMatrix { matrix, theta, gamma }
}

/// Reference form of `Q(r)` obtained by differentiating
/// `exp(y) = cos‖y‖ + (sin‖y‖/‖y‖)y` directly in `y = (φ/2)n`:
/// row one is `−a·yᵀ` and the lower block `b·yyᵀ + a·I₃` with
/// `a = sin‖y‖/‖y‖`, `b = cos‖y‖/‖y‖² − sin‖y‖/‖y‖³`.
///
/// Equivalent to [`q_matrix_theorem_form`] evaluated at `r = exp(y)`; kept as an
/// independently derived cross-check.
pub fn q_matrix_lemma_form(y: &PureQuaternion) -> Matrix4x3<f64> {
    let t = y.norm();
    let (a, b) = if t >= 0.25 {
        (t.sin() / t, t.cos() / (t * t) - t.sin() / (t * t * t))
    } else {
        // b suffers catastrophic cancellation for small ‖y‖; both scalars use
        // series accurate to well below 1e-12 at the branch point.
        let t2 = t * t;
        (
            1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 * t2 * t2 / 5040.0,
            -1.0 / 3.0 + t2 / 30.0 - t2 * t2 / 840.0 + t2 * t2 * t2 / 45360.0,
        )
    };
    Matrix4x3::new(
        -a * y.x,
        -a * y.y,
        -a * y.z,
        b * y.x * y.x + a,
        b * y.x * y.y,
        b * y.x * y.z,
        b * y.y * y.x,
        b * y.y * y.y + a,
        b * y.y * y.z,
        b * y.z * y.x,
        b * y.z * y.y,
        b * y.z * y.z + a,
    )
}

/// Constant dual block `Q_p = [0₁ₓ₃; I₃]` (translation rows enter `vec8`
/// through the dual part only).
fn q_p() -> Matrix4x3<f64> {
    let mut m = Matrix4x3::zeros();
    m.fixed_view_mut::<3, 3>(1, 0)
        .copy_from(&nalgebra::Matrix3::identity());
    m
}

/// Full log-map Jacobian
/// `Q₈(x) = [[Q(r), 0], [(1/2)H⁺₄(p)Q(r), H⁻₄(r)Q_p]]`.
pub fn q8(x: &UnitDualQuaternion) -> Matrix8x6 {
    let qr = q_matrix_theorem_form(&x.rotation()).matrix;
    let hp = x.translation().as_quaternion().hamilton_plus();
    let hr = x.primary().hamilton_minus();
    let mut m = Matrix8x6::zeros();
    m.fixed_view_mut::<4, 3>(0, 0).copy_from(&qr);
    m.fixed_view_mut::<4, 3>(4, 0).copy_from(&(hp * qr * 0.5));
    m.fixed_view_mut::<4, 3>(4, 3).copy_from(&(hr * q_p()));
    m
}

fn inf_norm(m: &Matrix6) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Left pseudoinverse `Q₈⁺ = (Q₈ᵀQ₈)⁻¹Q₈ᵀ`, computed through the explicit
/// 6×6 normal matrix rather than an SVD. Errors when `cond(Q₈ᵀQ₈)` exceeds
/// [`SINGULAR_COND_BOUND`], which happens only as the rotation angle
/// approaches 2π (`det(QᵀQ) = Θ⁴ → 0`).
pub fn q8_pinv(q: &Matrix8x6) -> Result<Matrix6x8> {
    let m = q.transpose() * q;
    let inv = m
        .try_inverse()
        .ok_or(Error::SingularMapping { cond: f64::INFINITY })?;
    let cond = inf_norm(&m) * inf_norm(&inv);
    if cond > SINGULAR_COND_BOUND {
        return Err(Error::SingularMapping { cond });
    }
    Ok(inv * q.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::PureDualQuaternion;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn rotation(axis: [f64; 3], angle: f64) -> UnitQuaternion {
        UnitQuaternion::from_axis_angle(&nalgebra::Vector3::from(axis), angle)
    }

    fn pose(axis: [f64; 3], angle: f64, p: [f64; 3]) -> UnitDualQuaternion {
        UnitDualQuaternion::from_rotation_translation(
            &rotation(axis, angle),
            &PureQuaternion::new(p[0], p[1], p[2]),
        )
    }

    #[test]
    fn lemma_form_quarter_turn_about_z() {
        // y = (π/4)k̂: a = sin(π/4)/(π/4), b = cos(π/4)/(π/4)² − sin(π/4)/(π/4)³;
        // first row (0, 0, −a·π/4) = (0, 0, −sin(π/4)).
        let t = PI / 4.0;
        let y = PureQuaternion::new(0.0, 0.0, t);
        let m = q_matrix_lemma_form(&y);
        let a = t.sin() / t;
        let b = t.cos() / (t * t) - t.sin() / (t * t * t);
        assert_abs_diff_eq!(m[(0, 2)], -t.sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 0)], a, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(2, 1)], a, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(3, 2)], b * t * t + a, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(0, 0)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 2)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_rotation_gives_zero_row_identity_block() {
        let m = q_matrix_lemma_form(&PureQuaternion::ZERO);
        let q = q_matrix_theorem_form(&UnitQuaternion::IDENTITY);
        assert_eq!(q.theta, 1.0);
        assert_eq!(q.gamma, 0.0);
        for r in 0..4 {
            for c in 0..3 {
                let expected = if r == c + 1 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(m[(r, c)], expected, epsilon = 1e-15);
                assert_abs_diff_eq!(q.matrix[(r, c)], expected, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn q8_at_identity_is_block_diagonal_embedding() {
        let m = q8(&UnitDualQuaternion::IDENTITY);
        let mut expected = Matrix8x6::zeros();
        expected.fixed_view_mut::<3, 3>(1, 0).copy_from(&nalgebra::Matrix3::identity());
        expected.fixed_view_mut::<3, 3>(5, 3).copy_from(&nalgebra::Matrix3::identity());
        assert!((m - expected).amax() <= 1e-15);
    }

    #[test]
    fn pinv_errors_near_full_turn() {
        let x = pose([0.0, 0.0, 1.0], TAU - 2e-7, [0.0, 0.0, 0.0]);
        assert!(matches!(
            q8_pinv(&q8(&x)),
            Err(crate::Error::SingularMapping { .. })
        ));
    }

    #[test]
    fn finite_difference_matches_q8() {
        // x(t) = exp(t·g) has y(t) = t·g exactly, so vec6(ẏ) = vec6(g).
        let g = PureDualQuaternion::new(
            PureQuaternion::new(0.31, -0.44, 0.52),
            PureQuaternion::new(-0.8, 0.25, 0.61),
        );
        let h = 1e-6;
        for &t in &[0.1, 0.9, 2.1] {
            let x = g.scale(t).exp();
            let plus = g.scale(t + h).exp().vec8();
            let minus = g.scale(t - h).exp().vec8();
            let fd = (plus - minus) / (2.0 * h);
            let predicted = q8(&x) * g.vec6();
            assert!((fd - predicted).amax() <= 1e-9, "t = {t}");
        }
    }

    fn arb_angle() -> impl Strategy<Value = f64> {
        // Mostly uniform over (0, 2π), plus bands near 0, π, and 2π where the
        // two forms stress different branches.
        prop_oneof![
            4 => 1e-9f64..(TAU - 1e-3),
            1 => 0.0f64..1e-4,
            1 => (PI - 1e-4)..(PI + 1e-4),
            1 => (TAU - 1e-4)..(TAU - 1e-9),
        ]
    }

    fn arb_axis() -> impl Strategy<Value = nalgebra::Vector3<f64>> {
        (-1.0f64..1.0, 0.0f64..TAU).prop_map(|(z, az)| {
            let s = (1.0 - z * z).max(0.0).sqrt();
            nalgebra::Vector3::new(s * az.cos(), s * az.sin(), z)
        })
    }

    proptest! {
        #[test]
        fn closed_form_matches_lemma_form(angle in arb_angle(), axis in arb_axis()) {
            prop_assume!(axis.norm() > 1e-6);
            let r = UnitQuaternion::from_axis_angle(&axis, angle);
            // y = (φ/2)n for the same (non-canonicalized) angle.
            let y = PureQuaternion::from_vec3(&(axis.normalize() * (angle / 2.0)));
            let diff = q_matrix_theorem_form(&r).matrix - q_matrix_lemma_form(&y);
            prop_assert!(diff.amax() <= 1e-10, "max err {}", diff.amax());
        }

        #[test]
        fn determinant_identity(angle in arb_angle(), axis in arb_axis()) {
            prop_assume!(axis.norm() > 1e-6);
            let q = q_matrix_theorem_form(&UnitQuaternion::from_axis_angle(&axis, angle));
            let det = (q.matrix.transpose() * q.matrix).determinant();
            prop_assert!((det - q.theta.powi(4)).abs() <= 1e-9);
        }

        #[test]
        fn pinv_is_left_inverse(
            angle in 0.0f64..3.1,
            axis in arb_axis(),
            p in prop::array::uniform3(-2.0f64..2.0),
        ) {
            prop_assume!(axis.norm() > 1e-6);
            let x = UnitDualQuaternion::from_rotation_translation(
                &UnitQuaternion::from_axis_angle(&axis, angle),
                &PureQuaternion::new(p[0], p[1], p[2]),
            );
            let err = (q8_pinv(&q8(&x)).unwrap() * q8(&x) - Matrix6::identity()).amax();
            prop_assert!(err <= 1e-9, "err {err}");
        }

        #[test]
        fn block_inverse_identity(
            angle in 0.0f64..3.1,
            axis in arb_axis(),
            p in prop::array::uniform3(-2.0f64..2.0),
        ) {
            // [[I,0],[½H⁺(p), H⁻(r)]]⁻¹ = [[I,0],[−½H⁻(r*)H⁺(p), H⁻(r*)]].
            prop_assume!(axis.norm() > 1e-6);
            let r = UnitQuaternion::from_axis_angle(&axis, angle);
            let pq = PureQuaternion::new(p[0], p[1], p[2]).as_quaternion();
            let i4 = nalgebra::Matrix4::identity();
            let mut a = nalgebra::SMatrix::<f64, 8, 8>::zeros();
            a.fixed_view_mut::<4, 4>(0, 0).copy_from(&i4);
            a.fixed_view_mut::<4, 4>(4, 0).copy_from(&(pq.hamilton_plus() * 0.5));
            a.fixed_view_mut::<4, 4>(4, 4).copy_from(&r.as_quaternion().hamilton_minus());
            let rc = r.conj();
            let mut ainv = nalgebra::SMatrix::<f64, 8, 8>::zeros();
            ainv.fixed_view_mut::<4, 4>(0, 0).copy_from(&i4);
            ainv.fixed_view_mut::<4, 4>(4, 0).copy_from(
                &(-(rc.as_quaternion().hamilton_minus() * pq.hamilton_plus()) * 0.5),
            );
            ainv.fixed_view_mut::<4, 4>(4, 4).copy_from(&rc.as_quaternion().hamilton_minus());
            let err = (a * ainv - nalgebra::SMatrix::<f64, 8, 8>::identity()).amax();
            prop_assert!(err <= 1e-12);
        }

        #[test]
        fn q8_consistent_with_pose_derivative(
            angle in 0.0f64..3.1,
            axis in arb_axis(),
            p in prop::array::uniform3(-2.0f64..2.0),
            w in prop::array::uniform6(-1.0f64..1.0),
        ) {
            // For any twist ξ, ẋ = ½ξx must lie in the range of Q₈(x):
            // Q₈(Q₈⁺ vec8(ẋ)) = vec8(ẋ).
            prop_assume!(axis.norm() > 1e-6);
            let x = UnitDualQuaternion::from_rotation_translation(
                &UnitQuaternion::from_axis_angle(&axis, angle),
                &PureQuaternion::new(p[0], p[1], p[2]),
            );
            let xi = crate::algebra::Twist::new(PureDualQuaternion::new(
                PureQuaternion::new(w[0], w[1], w[2]),
                PureQuaternion::new(w[3], w[4], w[5]),
            ));
            let xdot = x.derivative(&xi).vec8();
            let projected = q8(&x) * (q8_pinv(&q8(&x)).unwrap() * xdot);
            prop_assert!((projected - xdot).amax() <= 1e-9);
        }
    }
}
