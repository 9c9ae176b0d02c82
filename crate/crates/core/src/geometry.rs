//! Directions on the unit sphere and detector setting pairs.

use std::ops::Neg;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Norm tolerance enforced by the unit-vector invariant.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-12;

/// A direction on the unit sphere.
///
/// The components always satisfy `x^2 + y^2 + z^2 = 1` within
/// [`UNIT_NORM_TOLERANCE`]; construction goes through [`UnitVec3::new`],
/// which normalizes its input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 3]", try_from = "[f64; 3]")]
pub struct UnitVec3 {
    x: f64,
    y: f64,
    z: f64,
}

impl UnitVec3 {
    /// The +x axis.
    pub const X: UnitVec3 = UnitVec3 { x: 1.0, y: 0.0, z: 0.0 };
    /// The +y axis.
    pub const Y: UnitVec3 = UnitVec3 { x: 0.0, y: 1.0, z: 0.0 };
    /// The +z axis.
    pub const Z: UnitVec3 = UnitVec3 { x: 0.0, y: 0.0, z: 1.0 };

    /// Builds a unit vector by normalizing `(x, y, z)`.
    ///
    /// Rejects non-finite components and vectors too close to zero for a
    /// stable direction.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::NonFinite("vector component"));
        }
        let norm = (x * x + y * y + z * z).sqrt();
        if norm < 1e-12 {
            return Err(Error::ZeroVector { norm });
        }
        Ok(UnitVec3 { x: x / norm, y: y / norm, z: z / norm })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Euclidean norm of the stored components. Equals 1 up to rounding.
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Euclidean distance to another direction (chord length, in `[0, 2]`).
    pub fn distance(&self, other: &UnitVec3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

impl Neg for UnitVec3 {
    type Output = UnitVec3;

    fn neg(self) -> UnitVec3 {
        UnitVec3 { x: -self.x, y: -self.y, z: -self.z }
    }
}

impl From<UnitVec3> for [f64; 3] {
    fn from(v: UnitVec3) -> [f64; 3] {
        v.components()
    }
}

impl TryFrom<[f64; 3]> for UnitVec3 {
    type Error = Error;

    fn try_from(c: [f64; 3]) -> Result<UnitVec3> {
        UnitVec3::new(c[0], c[1], c[2])
    }
}

/// Inner product of two directions, clamped to `[-1, 1]`.
///
/// The clamp absorbs rounding so downstream probabilities built from
/// `(1 + s * dot)/2` terms stay inside `[0, 1]`.
pub fn dot(u: UnitVec3, v: UnitVec3) -> f64 {
    (u.x * v.x + u.y * v.y + u.z * v.z).clamp(-1.0, 1.0)
}

/// Direction in the xy-plane at `angle` radians from the +x axis.
pub fn planar_direction(angle: f64) -> Result<UnitVec3> {
    if !angle.is_finite() {
        return Err(Error::NonFinite("angle"));
    }
    Ok(UnitVec3 { x: angle.cos(), y: angle.sin(), z: 0.0 })
}

/// Draws a direction uniformly distributed on the unit sphere.
///
/// Mapping (fixed so seeded streams reproduce exactly): two uniform variates
/// `u1, u2` in `[0, 1)` are drawn in this order and mapped through
/// `z = 1 - 2*u1` (the cosine of the polar angle is uniform on `[-1, 1]`)
/// and `phi = 2*pi*u2`, giving
/// `(sqrt(1 - z^2) cos(phi), sqrt(1 - z^2) sin(phi), z)`.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> UnitVec3 {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let z = 1.0 - 2.0 * u1;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = 2.0 * std::f64::consts::PI * u2;
    UnitVec3 { x: r * phi.cos(), y: r * phi.sin(), z }
}

/// The pair of detector orientations `(a, b)` chosen at the two stations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub a: UnitVec3,
    pub b: UnitVec3,
}

impl Settings {
    pub fn new(a: UnitVec3, b: UnitVec3) -> Self {
        Settings { a, b }
    }

    /// Coplanar settings: `a` along +x, `b` in the xy-plane at `angle`
    /// radians from `a`.
    pub fn from_angle(angle: f64) -> Result<Self> {
        Ok(Settings { a: UnitVec3::X, b: planar_direction(angle)? })
    }
}
