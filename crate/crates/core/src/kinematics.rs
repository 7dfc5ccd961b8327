//! Mobile manipulator kinematics in dual quaternion form.
//!
//! A mobile manipulator is a planar base with configuration `q_b = (x, y, φ)`
//! carrying a serial arm of revolute joints described by standard
//! Denavit–Hartenberg rows. The end-effector pose factors as
//! `x_e⁰ = x_b⁰ · x_m^b · x_e^m` with a constant mount transform `x_m^b`, and
//! the whole-body Jacobian maps stacked generalized velocities
//! `(ẋ, ẏ, φ̇, q̇₁, …)` to `vec8(ẋ_e⁰)`:
//!
//! `J_w = [ H⁻₈(x_m^b·x_e^m)·J_b | H⁺₈(x_b⁰·x_m^b)·J_m ]`.
//!
//! Every column of `J_w` is tangent to the unit dual quaternion manifold, so
//! its rank is at most 6; a base plus an arm with three or more suitably
//! oriented joints reaches rank 6 away from singular configurations.

use nalgebra::{DMatrix, SMatrix, Vector3};

use crate::algebra::{DualQuaternion, PureQuaternion, Quaternion, UnitDualQuaternion, UnitQuaternion};

pub type Matrix8x3 = SMatrix<f64, 8, 3>;

/// Singular values below `max σ · SINGULAR_VALUE_REL_TOL` are truncated by
/// [`pseudo_inverse`].
pub const SINGULAR_VALUE_REL_TOL: f64 = 1e-8;

/// One standard Denavit–Hartenberg row; `theta` is the constant joint-angle
/// offset added to the joint variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DhRow {
    pub theta: f64,
    pub d: f64,
    pub a: f64,
    pub alpha: f64,
}

/// Serial arm (revolute joints) plus its constant mount pose on the base.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmModel {
    pub rows: Vec<DhRow>,
    pub mount: UnitDualQuaternion,
}

impl ArmModel {
    pub fn dof(&self) -> usize {
        self.rows.len()
    }
}

fn rotation_dq(axis: Vector3<f64>, angle: f64) -> UnitDualQuaternion {
    UnitDualQuaternion::from_rotation_translation(
        &UnitQuaternion::from_axis_angle(&axis, angle),
        &PureQuaternion::ZERO,
    )
}

fn translation_dq(p: PureQuaternion) -> UnitDualQuaternion {
    UnitDualQuaternion::from_rotation_translation(&UnitQuaternion::IDENTITY, &p)
}

/// Joint transform `rot_z(θ+q) · trans_z(d) · trans_x(a) · rot_x(α)`.
pub fn dh_transform(row: &DhRow, q: f64) -> UnitDualQuaternion {
    rotation_dq(Vector3::z(), row.theta + q)
        * translation_dq(PureQuaternion::new(0.0, 0.0, row.d))
        * translation_dq(PureQuaternion::new(row.a, 0.0, 0.0))
        * rotation_dq(Vector3::x(), row.alpha)
}

/// Arm forward kinematics `x_e^m(q)` relative to the mount frame.
pub fn arm_fk(model: &ArmModel, q: &[f64]) -> UnitDualQuaternion {
    assert_eq!(q.len(), model.dof(), "joint vector length mismatch");
    model
        .rows
        .iter()
        .zip(q)
        .map(|(row, &qk)| dh_transform(row, qk))
        .fold(UnitDualQuaternion::IDENTITY, |acc, t| acc * t)
}

/// Analytic arm Jacobian `∂vec8(x_e^m)/∂q`, 8×dof.
///
/// Each joint enters through `rot_z(θ_k + q_k)` whose derivative is
/// `(1/2)k̂·rot_z`, so column `k` is
/// `(1/2)·vec8(A₁…A_{k−1} · k̂ · A_k…A_dof)`.
pub fn arm_jacobian(model: &ArmModel, q: &[f64]) -> DMatrix<f64> {
    assert_eq!(q.len(), model.dof(), "joint vector length mismatch");
    let dof = model.dof();
    let transforms: Vec<UnitDualQuaternion> = model
        .rows
        .iter()
        .zip(q)
        .map(|(row, &qk)| dh_transform(row, qk))
        .collect();
    // suffix[k] = A_k … A_dof (suffix[dof] = identity).
    let mut suffix = vec![UnitDualQuaternion::IDENTITY; dof + 1];
    for k in (0..dof).rev() {
        suffix[k] = transforms[k] * suffix[k + 1];
    }
    let k_hat = DualQuaternion::new(Quaternion::new(0.0, 0.0, 0.0, 1.0), Quaternion::ZERO);
    let mut jac = DMatrix::zeros(8, dof);
    let mut prefix = UnitDualQuaternion::IDENTITY;
    for k in 0..dof {
        let col = (*prefix.as_dual_quaternion() * k_hat * *suffix[k].as_dual_quaternion()).vec8() * 0.5;
        jac.column_mut(k).copy_from_slice(col.as_slice());
        prefix = prefix * transforms[k];
    }
    jac
}

/// Planar base pose: yaw `φ` about `k̂` and translation `(x, y, 0)`.
pub fn base_pose(qb: &[f64; 3]) -> UnitDualQuaternion {
    let r = UnitQuaternion::from_axis_angle(&Vector3::z(), qb[2]);
    UnitDualQuaternion::from_rotation_translation(&r, &PureQuaternion::new(qb[0], qb[1], 0.0))
}

/// Analytic base Jacobian `∂vec8(x_b⁰)/∂(x, y, φ)`, 8×3.
pub fn base_jacobian(qb: &[f64; 3]) -> Matrix8x3 {
    let (x, y, phi) = (qb[0], qb[1], qb[2]);
    let (s, c) = (phi / 2.0).sin_cos();
    // vec8(x_b) = (c, 0, 0, s, 0, (x·c + y·s)/2, (y·c − x·s)/2, 0).
    let mut j = Matrix8x3::zeros();
    j[(5, 0)] = c / 2.0;
    j[(6, 0)] = -s / 2.0;
    j[(5, 1)] = s / 2.0;
    j[(6, 1)] = c / 2.0;
    j[(0, 2)] = -s / 2.0;
    j[(3, 2)] = c / 2.0;
    j[(5, 2)] = (-x * s + y * c) / 4.0;
    j[(6, 2)] = (-y * s - x * c) / 4.0;
    j
}

/// Whole-body forward kinematics `x_e⁰ = x_b⁰ · x_m^b · x_e^m`.
pub fn whole_body_fk(qb: &[f64; 3], model: &ArmModel, qm: &[f64]) -> UnitDualQuaternion {
    base_pose(qb) * model.mount * arm_fk(model, qm)
}

/// Whole-body Jacobian, 8×(3+dof).
pub fn whole_body_jacobian(qb: &[f64; 3], model: &ArmModel, qm: &[f64]) -> DMatrix<f64> {
    let arm = arm_fk(model, qm);
    let left = (model.mount * arm).as_dual_quaternion().hamilton_minus() * base_jacobian(qb);
    let right_op = (base_pose(qb) * model.mount).as_dual_quaternion().hamilton_plus();
    let jm = arm_jacobian(model, qm);
    let dof = model.dof();
    let mut jw = DMatrix::zeros(8, 3 + dof);
    jw.view_mut((0, 0), (8, 3))
        .copy_from(&DMatrix::from_column_slice(8, 3, left.as_slice()));
    for k in 0..dof {
        let col = right_op * SMatrix::<f64, 8, 1>::from_column_slice(jm.column(k).as_slice());
        jw.view_mut((0, 3 + k), (8, 1))
            .copy_from_slice(col.as_slice());
    }
    jw
}

/// Moore–Penrose pseudoinverse via SVD with relative singular-value
/// truncation at [`SINGULAR_VALUE_REL_TOL`].
pub fn pseudo_inverse(j: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = j.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let eps = (max_sv * SINGULAR_VALUE_REL_TOL).max(f64::MIN_POSITIVE);
    svd.pseudo_inverse(eps)
        .expect("SVD computed with both sets of singular vectors")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn sample_model() -> ArmModel {
        ArmModel {
            rows: vec![
                DhRow { theta: 0.0, d: 0.147, a: 0.033, alpha: FRAC_PI_2 },
                DhRow { theta: FRAC_PI_2, d: 0.0, a: 0.155, alpha: 0.0 },
                DhRow { theta: 0.0, d: 0.0, a: 0.135, alpha: 0.0 },
                DhRow { theta: FRAC_PI_2, d: 0.0, a: 0.0, alpha: FRAC_PI_2 },
                DhRow { theta: 0.0, d: 0.2175, a: 0.0, alpha: 0.0 },
            ],
            mount: UnitDualQuaternion::from_rotation_translation(
                &UnitQuaternion::IDENTITY,
                &PureQuaternion::new(0.15, 0.0, 0.2),
            ),
        }
    }

    #[test]
    fn single_link_at_zero() {
        let model = ArmModel {
            rows: vec![DhRow { theta: 0.0, d: 0.0, a: 1.0, alpha: 0.0 }],
            mount: UnitDualQuaternion::IDENTITY,
        };
        let x = arm_fk(&model, &[0.0]);
        assert!((x.vec8() - nalgebra::SVector::<f64, 8>::from_column_slice(
            &[1.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0]
        )).amax() <= 1e-15);

        // Single joint at zero: the Jacobian column is (1/2)·vec8(k̂·x).
        let j = arm_jacobian(&model, &[0.0]);
        let k_hat = DualQuaternion::new(Quaternion::new(0.0, 0.0, 0.0, 1.0), Quaternion::ZERO);
        let expected = (k_hat * *x.as_dual_quaternion()).vec8() * 0.5;
        for r in 0..8 {
            assert_abs_diff_eq!(j[(r, 0)], expected[r], epsilon = 1e-15);
        }
    }

    #[test]
    fn planar_two_link_elbow() {
        // a₁ = a₂ = 1, q = (π/2, 0): end effector at (0, 2) rotated π/2.
        let model = ArmModel {
            rows: vec![
                DhRow { theta: 0.0, d: 0.0, a: 1.0, alpha: 0.0 },
                DhRow { theta: 0.0, d: 0.0, a: 1.0, alpha: 0.0 },
            ],
            mount: UnitDualQuaternion::IDENTITY,
        };
        let x = arm_fk(&model, &[FRAC_PI_2, 0.0]);
        let p = x.translation();
        assert_abs_diff_eq!(p.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x.rotation().angle(), FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn base_pose_half_turn() {
        let x = base_pose(&[0.0, 0.0, PI]);
        let v = x.vec8();
        assert_abs_diff_eq!(v[3], 1.0, epsilon = 1e-15); // k̂
        assert!(v.iter().enumerate().filter(|(i, _)| *i != 3).all(|(_, c)| c.abs() < 1e-15));
    }

    #[test]
    fn base_jacobian_matches_finite_differences() {
        let qb = [0.4, -1.1, 0.9];
        let j = base_jacobian(&qb);
        let h = 1e-7;
        for k in 0..3 {
            let mut plus = qb;
            let mut minus = qb;
            plus[k] += h;
            minus[k] -= h;
            let fd = (base_pose(&plus).vec8() - base_pose(&minus).vec8()) / (2.0 * h);
            for r in 0..8 {
                assert_abs_diff_eq!(j[(r, k)], fd[r], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn whole_body_jacobian_matches_finite_differences() {
        let model = sample_model();
        let qb = [0.3, -0.2, 0.7];
        let qm = [0.4, 0.3, -0.6, 0.5, 0.2];
        let j = whole_body_jacobian(&qb, &model, &qm);
        let h = 1e-6;
        for k in 0..8 {
            let mut qbp = qb;
            let mut qbm = qb;
            let mut qmp = qm.to_vec();
            let mut qmm = qm.to_vec();
            if k < 3 {
                qbp[k] += h;
                qbm[k] -= h;
            } else {
                qmp[k - 3] += h;
                qmm[k - 3] -= h;
            }
            let fd = (whole_body_fk(&qbp, &model, &qmp).vec8()
                - whole_body_fk(&qbm, &model, &qmm).vec8())
                / (2.0 * h);
            for r in 0..8 {
                assert_abs_diff_eq!(j[(r, k)], fd[r], epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn whole_body_rank_six_generic_and_deficient_when_stretched() {
        let model = sample_model();
        let generic = whole_body_jacobian(&[0.3, -0.2, 0.7], &model, &[0.4, 0.3, -0.6, 0.5, 0.2]);
        let sv = generic.clone().svd(false, false).singular_values;
        // Columns are tangent to the unit manifold, so rank never exceeds 6.
        assert!(sv[5] / sv[0] > 1e-6, "expected full task rank, σ = {sv}");
        assert!(sv[6] / sv[0] < 1e-10);

        // Stretched arm: pitch joints collinear, the axial direction is lost.
        let stretched = whole_body_jacobian(&[0.0, 0.0, 0.0], &model, &[0.0, 0.0, 0.0, 0.0, 0.0]);
        let sv = stretched.svd(false, false).singular_values;
        assert!(sv[5] / sv[0] < 1e-10, "expected rank drop, σ = {sv}");
    }

    #[test]
    fn pseudo_inverse_satisfies_penrose_conditions() {
        let model = sample_model();
        let j = whole_body_jacobian(&[0.1, 0.5, -0.4], &model, &[0.3, 0.7, -0.5, 0.4, -0.3]);
        let jp = pseudo_inverse(&j);
        let e1 = (&j * &jp * &j - &j).amax();
        let e2 = (&jp * &j * &jp - &jp).amax();
        let jjp = &j * &jp;
        let pjj = &jp * &j;
        let e3 = (&jjp - jjp.transpose()).amax();
        let e4 = (&pjj - pjj.transpose()).amax();
        assert!(e1 <= 1e-8 && e2 <= 1e-8 && e3 <= 1e-8 && e4 <= 1e-8, "{e1} {e2} {e3} {e4}");
    }
}
