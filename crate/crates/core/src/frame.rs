//! Planar vectors, frame rotations and per-unit bases.
//!
//! The rotation is R(θ) = [[cos θ, sin θ], [−sin θ, cos θ]] and J = [[0, −1], [1, 0]],
//! so that R(θ) = exp(−θJ) and d/dt (R(θ) v) = −θ' J R(θ) v + R(θ) v'.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Two-component per-unit quantity (dq, ri or uv frame).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2(pub f64, pub f64);

impl Vec2 {
    pub const ZERO: Vec2 = Vec2(0.0, 0.0);

    pub fn new(a: f64, b: f64) -> Self {
        Vec2(a, b)
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Vec2(s[0], s[1])
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.0 * o.0 + self.1 * o.1
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite() && self.1.is_finite()
    }

    pub fn write(self, out: &mut [f64]) {
        out[0] = self.0;
        out[1] = self.1;
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2(self.0 + o.0, self.1 + o.1)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.0 += o.0;
        self.1 += o.1;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2(self.0 - o.0, self.1 - o.1)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2(-self.0, -self.1)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2(self.0 * k, self.1 * k)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

/// Frame angle in radians. Stored unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameAngle(pub f64);

impl FrameAngle {
    /// Angle wrapped to (−π, π], for reporting only.
    pub fn wrapped(self) -> f64 {
        let t = self.0.rem_euclid(std::f64::consts::TAU);
        if t > std::f64::consts::PI {
            t - std::f64::consts::TAU
        } else {
            t
        }
    }

    pub fn matrix(self) -> [[f64; 2]; 2] {
        let (s, c) = self.0.sin_cos();
        [[c, s], [-s, c]]
    }
}

/// R(θ)·v
pub fn rotate(theta: FrameAngle, v: Vec2) -> Vec2 {
    let (s, c) = theta.0.sin_cos();
    Vec2(c * v.0 + s * v.1, -s * v.0 + c * v.1)
}

/// R(θ)ᵀ·v, the inverse rotation.
pub fn rotate_back(theta: FrameAngle, v: Vec2) -> Vec2 {
    rotate(FrameAngle(-theta.0), v)
}

/// J·v
pub fn jmul(v: Vec2) -> Vec2 {
    Vec2(-v.1, v.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerUnitBase {
    /// rad/s
    pub omega_b: f64,
    pub omega_s: f64,
    /// Power-base ratio of the data-center subsystem to the system base.
    pub s_base: f64,
}

impl Default for PerUnitBase {
    fn default() -> Self {
        PerUnitBase {
            omega_b: 2.0 * std::f64::consts::PI * 60.0,
            omega_s: 1.0,
            s_base: 1.0,
        }
    }
}

impl PerUnitBase {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.omega_b > 0.0) {
            return Err(crate::Error::param("base.omega_b", "must be > 0"));
        }
        if !(self.omega_s > 0.0) {
            return Err(crate::Error::param("base.omega_s", "must be > 0"));
        }
        if !(self.s_base > 0.0) {
            return Err(crate::Error::param("base.s_base", "must be > 0"));
        }
        Ok(())
    }
}

const PHASE: [f64; 3] = [0.0, 2.0 * std::f64::consts::FRAC_PI_3, -2.0 * std::f64::consts::FRAC_PI_3];

/// Power-invariant uv → abc map at frame angle θ.
///
/// Oriented so that the uv-frame inductor equations carry a +ωℓJ term
/// (the convention of the VSI model) while abc stays positive-sequence.
pub fn uv_to_abc(theta: f64, v: Vec2) -> [f64; 3] {
    let k = (2.0_f64 / 3.0).sqrt();
    let mut out = [0.0; 3];
    for (o, ph) in out.iter_mut().zip(PHASE) {
        let (s, c) = (theta - ph).sin_cos();
        *o = k * (c * v.0 + s * v.1);
    }
    out
}

/// Inverse of [`uv_to_abc`] (its transpose).
pub fn abc_to_uv(theta: f64, x: [f64; 3]) -> Vec2 {
    let k = (2.0_f64 / 3.0).sqrt();
    let mut out = Vec2::ZERO;
    for (xi, ph) in x.iter().zip(PHASE) {
        let (s, c) = (theta - ph).sin_cos();
        out.0 += k * c * xi;
        out.1 += k * s * xi;
    }
    out
}
