//! Real quaternions, their pure (imaginary) and unit subsets, and the 4×4
//! Hamilton operators.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix4, Vector3, Vector4};

use super::{UNIT_EXACT_TOL, UNIT_RENORM_TOL};
use crate::{Error, Result};

/// Quaternion `w + xî + yĵ + zk̂` with the product rules
/// `î² = ĵ² = k̂² = îĵk̂ = −1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Self = Self::new(1.0, 0.0, 0.0, 0.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_parts(re: f64, im: PureQuaternion) -> Self {
        Self::new(re, im.x, im.y, im.z)
    }

    /// Scalar (real) part.
    pub fn re(&self) -> f64 {
        self.w
    }

    /// Imaginary part as a pure quaternion.
    pub fn im(&self) -> PureQuaternion {
        PureQuaternion::new(self.x, self.y, self.z)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_squared(&self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Euclidean inner product of the coefficient vectors.
    pub fn dot(&self, other: &Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    pub fn vec4(&self) -> Vector4<f64> {
        Vector4::new(self.w, self.x, self.y, self.z)
    }

    pub fn from_vec4(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    /// Hamilton operator `H⁺₄(h)` with `vec4(h·g) = H⁺₄(h)·vec4(g)`.
    pub fn hamilton_plus(&self) -> Matrix4<f64> {
        let Self { w, x, y, z } = *self;
        Matrix4::new(
            w, -x, -y, -z, //
            x, w, -z, y, //
            y, z, w, -x, //
            z, -y, x, w,
        )
    }

    /// Hamilton operator `H⁻₄(h)` with `vec4(g·h) = H⁻₄(h)·vec4(g)`.
    pub fn hamilton_minus(&self) -> Matrix4<f64> {
        let Self { w, x, y, z } = *self;
        Matrix4::new(
            w, -x, -y, -z, //
            x, w, z, -y, //
            y, -z, w, x, //
            z, y, -x, w,
        )
    }
}

impl Add for Quaternion {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.w + rhs.w, self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Quaternion {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.w - rhs.w, self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for Quaternion {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for Quaternion {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.w * rhs.w - self.x * rhs.x - self.y * rhs.y - self.z * rhs.z,
            self.w * rhs.x + self.x * rhs.w + self.y * rhs.z - self.z * rhs.y,
            self.w * rhs.y - self.x * rhs.z + self.y * rhs.w + self.z * rhs.x,
            self.w * rhs.z + self.x * rhs.y - self.y * rhs.x + self.z * rhs.w,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

/// Quaternion with zero scalar part; isomorphic to ℝ³.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PureQuaternion {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl PureQuaternion {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn as_quaternion(&self) -> Quaternion {
        Quaternion::new(0.0, self.x, self.y, self.z)
    }

    pub fn norm_squared(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn vec3(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vec3(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    /// Cross product expressed with quaternion products:
    /// `p × w = (p·w − w·p)/2`. Coincides with the ℝ³ cross product.
    pub fn cross(&self, other: &Self) -> Self {
        let a = self.as_quaternion();
        let b = other.as_quaternion();
        ((a * b - b * a).scale(0.5)).im()
    }

    /// Exponential `exp(g) = cos‖g‖ + (sin‖g‖/‖g‖)·g`, equal to 1 at `g = 0`.
    pub fn exp(&self) -> UnitQuaternion {
        let t = self.norm();
        // sin(t)/t evaluated through its series below the branch point so the
        // zero-angle case lands on the `1` branch exactly.
        let sinc = if t > 1e-6 { t.sin() / t } else { 1.0 - t * t / 6.0 };
        UnitQuaternion::new_unchecked(Quaternion::from_parts(t.cos(), self.scale(sinc)))
    }
}

impl Add for PureQuaternion {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for PureQuaternion {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for PureQuaternion {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul<f64> for PureQuaternion {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

/// Quaternion constrained to unit norm; represents a rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitQuaternion(Quaternion);

impl UnitQuaternion {
    pub const IDENTITY: Self = Self(Quaternion::ONE);

    /// Accepts `q` when its norm deviates from 1 by at most
    /// [`UNIT_EXACT_TOL`](super::UNIT_EXACT_TOL), renormalizes deviations up
    /// to [`UNIT_RENORM_TOL`](super::UNIT_RENORM_TOL), and rejects anything
    /// larger.
    pub fn try_new(q: Quaternion) -> Result<Self> {
        let norm = q.norm();
        let deviation = (norm - 1.0).abs();
        if deviation <= UNIT_EXACT_TOL {
            Ok(Self(q))
        } else if deviation <= UNIT_RENORM_TOL {
            Ok(Self(q.scale(1.0 / norm)))
        } else {
            Err(Error::NotUnit { deviation })
        }
    }

    pub(crate) fn new_unchecked(q: Quaternion) -> Self {
        Self(q)
    }

    /// Rotation by `angle` about `axis` (need not be normalized, must be
    /// nonzero): `cos(angle/2) + sin(angle/2)·n`.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        debug_assert!(n > 0.0, "rotation axis must be nonzero");
        let half = angle / 2.0;
        let im = PureQuaternion::from_vec3(&(axis * (half.sin() / n)));
        Self(Quaternion::from_parts(half.cos(), im))
    }

    pub fn as_quaternion(&self) -> &Quaternion {
        &self.0
    }

    pub fn conj(&self) -> Self {
        Self(self.0.conj())
    }

    /// Rotation angle `φ = 2·atan2(‖Im r‖, Re r) ∈ [0, 2π)`.
    pub fn angle(&self) -> f64 {
        self.0.im().norm().atan2(self.0.w) * 2.0
    }

    /// Flips the sign when the scalar part is negative so the encoded angle
    /// lies in `[0, π]`; both signs represent the same rotation.
    pub fn canonicalized(&self) -> Self {
        if self.0.w < 0.0 {
            Self(-self.0)
        } else {
            *self
        }
    }

    /// Logarithm `(φ/2)·n` of the canonical (shortest-arc) representative.
    pub fn log(&self) -> PureQuaternion {
        let q = self.canonicalized().0;
        let im = q.im();
        let im_norm = im.norm();
        if im_norm <= 1e-12 {
            PureQuaternion::ZERO
        } else {
            im.scale(im_norm.atan2(q.w) / im_norm)
        }
    }
}

impl Mul for UnitQuaternion {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let q = self.0 * rhs.0;
        // Unit inputs keep the drift at rounding level; renormalize it away.
        Self(q.scale(1.0 / q.norm()))
    }
}
