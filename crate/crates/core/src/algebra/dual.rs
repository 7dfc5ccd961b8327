//! Dual quaternions `h + εh′` with `ε² = 0`, unit dual quaternions as rigid
//! motions, pure dual quaternions as elements of ℝ⁶, and twists.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{SMatrix, SVector};

use super::{PureQuaternion, Quaternion, UnitQuaternion, TWIST_PURITY_TOL, UNIT_EXACT_TOL, UNIT_RENORM_TOL};
use crate::{Error, Result};

pub type Vector6 = SVector<f64, 6>;
pub type Vector8 = SVector<f64, 8>;
pub type Matrix8 = SMatrix<f64, 8, 8>;

/// Dual quaternion `h + εh′` stored as primary and dual quaternion parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualQuaternion {
    pub primary: Quaternion,
    pub dual: Quaternion,
}

impl DualQuaternion {
    pub const ZERO: Self = Self::new(Quaternion::ZERO, Quaternion::ZERO);
    pub const ONE: Self = Self::new(Quaternion::ONE, Quaternion::ZERO);

    pub const fn new(primary: Quaternion, dual: Quaternion) -> Self {
        Self { primary, dual }
    }

    /// Quaternionic conjugate `h* + εh′*`.
    pub fn conj(&self) -> Self {
        Self::new(self.primary.conj(), self.dual.conj())
    }

    /// Norm as a dual number `(a, b)` with `‖x‖ = a + εb`:
    /// `a = ‖h‖`, `b = ⟨h, h′⟩ / ‖h‖`.
    pub fn norm(&self) -> (f64, f64) {
        let a = self.primary.norm();
        (a, self.primary.dot(&self.dual) / a)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.primary.scale(s), self.dual.scale(s))
    }

    /// Coefficients in the order `(w, x, y, z, w′, x′, y′, z′)`.
    pub fn vec8(&self) -> Vector8 {
        let p = self.primary;
        let d = self.dual;
        Vector8::from_column_slice(&[p.w, p.x, p.y, p.z, d.w, d.x, d.y, d.z])
    }

    pub fn from_vec8(v: &Vector8) -> Self {
        Self::new(
            Quaternion::new(v[0], v[1], v[2], v[3]),
            Quaternion::new(v[4], v[5], v[6], v[7]),
        )
    }

    /// Hamilton operator `H⁺₈(h)` with `vec8(h·g) = H⁺₈(h)·vec8(g)`.
    pub fn hamilton_plus(&self) -> Matrix8 {
        block_hamilton(self.primary.hamilton_plus(), self.dual.hamilton_plus())
    }

    /// Hamilton operator `H⁻₈(h)` with `vec8(g·h) = H⁻₈(h)·vec8(g)`.
    pub fn hamilton_minus(&self) -> Matrix8 {
        block_hamilton(self.primary.hamilton_minus(), self.dual.hamilton_minus())
    }
}

/// Lower-triangular block structure shared by both 8×8 Hamilton operators:
/// `[[H₄(h), 0], [H₄(h′), H₄(h)]]`.
fn block_hamilton(h: nalgebra::Matrix4<f64>, hd: nalgebra::Matrix4<f64>) -> Matrix8 {
    let mut m = Matrix8::zeros();
    m.fixed_view_mut::<4, 4>(0, 0).copy_from(&h);
    m.fixed_view_mut::<4, 4>(4, 0).copy_from(&hd);
    m.fixed_view_mut::<4, 4>(4, 4).copy_from(&h);
    m
}

impl Add for DualQuaternion {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.primary + rhs.primary, self.dual + rhs.dual)
    }
}

impl Sub for DualQuaternion {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.primary - rhs.primary, self.dual - rhs.dual)
    }
}

impl Neg for DualQuaternion {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for DualQuaternion {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        // ε² = 0 drops the dual·dual term.
        Self::new(
            self.primary * rhs.primary,
            self.primary * rhs.dual + self.dual * rhs.primary,
        )
    }
}

impl Mul<f64> for DualQuaternion {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

/// Dual quaternion whose primary and dual parts are both pure; isomorphic to
/// ℝ⁶ and the codomain of the logarithmic map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PureDualQuaternion {
    pub primary: PureQuaternion,
    pub dual: PureQuaternion,
}

impl PureDualQuaternion {
    pub const ZERO: Self = Self::new(PureQuaternion::ZERO, PureQuaternion::ZERO);

    pub const fn new(primary: PureQuaternion, dual: PureQuaternion) -> Self {
        Self { primary, dual }
    }

    pub fn as_dual_quaternion(&self) -> DualQuaternion {
        DualQuaternion::new(self.primary.as_quaternion(), self.dual.as_quaternion())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.primary.scale(s), self.dual.scale(s))
    }

    /// Coefficients in the order `(x, y, z, x′, y′, z′)`; these are the
    /// nonzero entries of `vec8` (positions 1 and 5 of `vec8` are zero).
    pub fn vec6(&self) -> Vector6 {
        Vector6::from_column_slice(&[
            self.primary.x,
            self.primary.y,
            self.primary.z,
            self.dual.x,
            self.dual.y,
            self.dual.z,
        ])
    }

    pub fn from_vec6(v: &Vector6) -> Self {
        Self::new(
            PureQuaternion::new(v[0], v[1], v[2]),
            PureQuaternion::new(v[3], v[4], v[5]),
        )
    }

    pub fn norm(&self) -> f64 {
        (self.primary.norm_squared() + self.dual.norm_squared()).sqrt()
    }

    /// Exponential `exp(g) = exp(ĝ) + ε·ĝ′·exp(ĝ)`; maps log outputs back to
    /// unit dual quaternions and is injective for rotation angles below 2π.
    pub fn exp(&self) -> UnitDualQuaternion {
        let primary = self.primary.exp();
        let dual = self.dual.as_quaternion() * *primary.as_quaternion();
        UnitDualQuaternion::new_unchecked(DualQuaternion::new(*primary.as_quaternion(), dual))
    }
}

impl Add for PureDualQuaternion {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.primary + rhs.primary, self.dual + rhs.dual)
    }
}

impl Sub for PureDualQuaternion {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.primary - rhs.primary, self.dual - rhs.dual)
    }
}

impl Neg for PureDualQuaternion {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul<f64> for PureDualQuaternion {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

/// Unit dual quaternion `x = r + ε(1/2)p·r`: rotation `r` followed by
/// translation `p`; the configuration space of a rigid body.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitDualQuaternion(DualQuaternion);

impl UnitDualQuaternion {
    pub const IDENTITY: Self = Self(DualQuaternion::ONE);

    /// Same acceptance policy as [`UnitQuaternion::try_new`], applied to both
    /// components of the dual norm `a + εb` (`a = 1`, `b = 0` for units).
    pub fn try_new(x: DualQuaternion) -> Result<Self> {
        let (a, b) = x.norm();
        let (da, db) = ((a - 1.0).abs(), b.abs());
        if da <= UNIT_EXACT_TOL && db <= UNIT_EXACT_TOL {
            Ok(Self(x))
        } else if da <= UNIT_RENORM_TOL && db <= UNIT_RENORM_TOL {
            Ok(Self(renormalize(&x, a, b)))
        } else {
            Err(Error::NotUnitDual { real: da, dual: db })
        }
    }

    pub(crate) fn new_unchecked(x: DualQuaternion) -> Self {
        Self(x)
    }

    /// Builds `r + ε(1/2)p·r` from a rotation and a translation.
    pub fn from_rotation_translation(r: &UnitQuaternion, p: &PureQuaternion) -> Self {
        let r = *r.as_quaternion();
        Self(DualQuaternion::new(r, (p.as_quaternion() * r).scale(0.5)))
    }

    pub fn as_dual_quaternion(&self) -> &DualQuaternion {
        &self.0
    }

    pub fn primary(&self) -> &Quaternion {
        &self.0.primary
    }

    pub fn dual(&self) -> &Quaternion {
        &self.0.dual
    }

    pub fn vec8(&self) -> Vector8 {
        self.0.vec8()
    }

    pub fn conj(&self) -> Self {
        Self(self.0.conj())
    }

    pub fn rotation(&self) -> UnitQuaternion {
        UnitQuaternion::new_unchecked(self.0.primary)
    }

    /// Translation `p = 2·h′·h*`; the scalar part vanishes for units.
    pub fn translation(&self) -> PureQuaternion {
        ((self.0.dual * self.0.primary.conj()).scale(2.0)).im()
    }

    /// Flips the sign when the primary scalar part is negative; both signs
    /// encode the same rigid motion.
    pub fn canonicalized(&self) -> Self {
        self.canonical_with_sign().0
    }

    /// Canonical representative together with the sign applied to reach it.
    pub fn canonical_with_sign(&self) -> (Self, f64) {
        if self.0.primary.w < 0.0 {
            (Self(-self.0), -1.0)
        } else {
            (*self, 1.0)
        }
    }

    /// Logarithm `(1/2)(φ·n + εp)` of the canonical representative, with
    /// `φ ∈ [0, π]` after sign canonicalization.
    pub fn log(&self) -> PureDualQuaternion {
        let x = self.canonicalized();
        let half_p = (x.0.dual * x.0.primary.conj()).im();
        PureDualQuaternion::new(x.rotation().log(), half_p)
    }

    /// Pose derivative `ẋ = (1/2)·ξ·x` for a body twist `ξ`.
    pub fn derivative(&self, xi: &Twist) -> DualQuaternion {
        (xi.as_pure().as_dual_quaternion() * self.0).scale(0.5)
    }

    /// Renormalizes in place; used by integrators to cancel drift.
    pub fn renormalize(&mut self) {
        let (a, b) = self.0.norm();
        self.0 = renormalize(&self.0, a, b);
    }
}

/// Divides by the dual-number norm `a + εb`:
/// `x/(a + εb) = h/a + ε(h′/a − h·b/a²)`.
fn renormalize(x: &DualQuaternion, a: f64, b: f64) -> DualQuaternion {
    DualQuaternion::new(
        x.primary.scale(1.0 / a),
        x.dual.scale(1.0 / a) - x.primary.scale(b / (a * a)),
    )
}

impl Mul for UnitDualQuaternion {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let x = self.0 * rhs.0;
        let (a, b) = x.norm();
        Self(renormalize(&x, a, b))
    }
}

/// Twist `ξ = ω + ε(ṗ + p × ω)`: a pure dual quaternion pairing body angular
/// velocity with the translational rate term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Twist(PureDualQuaternion);

impl Twist {
    pub const ZERO: Self = Self(PureDualQuaternion::ZERO);

    pub fn new(xi: PureDualQuaternion) -> Self {
        Self(xi)
    }

    /// Assembles the twist of a body at position `p` with angular velocity
    /// `ω` and translational velocity `ṗ`.
    pub fn from_velocities(omega: &PureQuaternion, p_dot: &PureQuaternion, p: &PureQuaternion) -> Self {
        Self(PureDualQuaternion::new(*omega, *p_dot + p.cross(omega)))
    }

    /// Accepts a dual quaternion whose real parts are at most
    /// [`TWIST_PURITY_TOL`](super::TWIST_PURITY_TOL) in magnitude (they are
    /// rounding residue of products such as `2ẋx*`) and strips them.
    pub fn try_from_dual(xi: &DualQuaternion) -> Result<Self> {
        let (re_p, re_d) = (xi.primary.w.abs(), xi.dual.w.abs());
        if re_p > TWIST_PURITY_TOL || re_d > TWIST_PURITY_TOL {
            return Err(Error::ImpureTwist { real: re_p, dual: re_d });
        }
        Ok(Self(PureDualQuaternion::new(xi.primary.im(), xi.dual.im())))
    }

    pub fn as_pure(&self) -> &PureDualQuaternion {
        &self.0
    }

    pub fn angular(&self) -> PureQuaternion {
        self.0.primary
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}
