//! End-effector pose in Cartesian space: position `(x, y, z)` in meters and
//! Euler angles `(roll, pitch, yaw)` in radians.

use std::f64::consts::PI;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Number of pose dimensions.
pub const POSE_DIM: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pose6(pub [f64; POSE_DIM]);

impl Pose6 {
    pub const ZERO: Pose6 = Pose6([0.0; POSE_DIM]);

    pub fn new(x: f64, y: f64, z: f64, roll: f64, pitch: f64, yaw: f64) -> Self {
        Pose6([x, y, z, roll, pitch, yaw])
    }

    pub fn position(&self) -> [f64; 3] {
        [self.0[0], self.0[1], self.0[2]]
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.0[0], self.0[1]]
    }

    /// Euclidean norm of the position part.
    pub fn linear_norm(&self) -> f64 {
        let [x, y, z] = self.position();
        (x * x + y * y + z * z).sqrt()
    }

    /// Largest absolute coordinate.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<[f64; POSE_DIM]> for Pose6 {
    fn from(v: [f64; POSE_DIM]) -> Self {
        Pose6(v)
    }
}

impl Index<usize> for Pose6 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Pose6 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for Pose6 {
    type Output = Pose6;
    fn add(self, rhs: Pose6) -> Pose6 {
        Pose6(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl Sub for Pose6 {
    type Output = Pose6;
    fn sub(self, rhs: Pose6) -> Pose6 {
        Pose6(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl Mul<f64> for Pose6 {
    type Output = Pose6;
    fn mul(self, rhs: f64) -> Pose6 {
        Pose6(self.0.map(|v| v * rhs))
    }
}

impl Neg for Pose6 {
    type Output = Pose6;
    fn neg(self) -> Pose6 {
        Pose6(self.0.map(|v| -v))
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Returns the representative of `a` (mod 2pi) closest to `reference`.
pub fn unwrap_near(a: f64, reference: f64) -> f64 {
    reference + wrap_angle(a - reference)
}

/// Horizontal-plane distance between two points.
pub fn planar_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
