//! Points of the circle `K = SO(2)` orbit of `e1` and of the projective line.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A unit vector in the plane. Read projectively, `u` and `-u` agree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CirclePoint(Vector2<f64>);

impl CirclePoint {
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self(Vector2::new(c, s))
    }

    pub fn from_vec(v: Vector2<f64>) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Precondition("zero or non-finite direction".into()));
        }
        Ok(Self(v / n))
    }

    pub fn e1() -> Self {
        Self(Vector2::new(1.0, 0.0))
    }

    pub fn vec(&self) -> Vector2<f64> {
        self.0
    }

    /// Angle in `(-π, π]`.
    pub fn angle(&self) -> f64 {
        self.0.y.atan2(self.0.x)
    }

    /// Projective angle in `[0, π)`.
    pub fn proj_angle(&self) -> f64 {
        let a = self.angle().rem_euclid(PI);
        if a >= PI {
            0.0
        } else {
            a
        }
    }

    pub fn antipode(&self) -> Self {
        Self(-self.0)
    }

    /// Direction of `g u`. `g` is invertible, so the image is never zero.
    pub fn act(&self, g: &Matrix2<f64>) -> Self {
        let v = g * self.0;
        Self(v / v.norm())
    }

    /// Like [`act`](Self::act), also returning `log ||g u||`.
    pub fn act_log(&self, g: &Matrix2<f64>) -> (Self, f64) {
        let v = g * self.0;
        let n = v.norm();
        (Self(v / n), n.ln())
    }

    /// Representative with first nonzero coordinate positive.
    pub fn canonical(&self) -> Self {
        if self.0.x < 0.0 || (self.0.x == 0.0 && self.0.y < 0.0) {
            self.antipode()
        } else {
            *self
        }
    }

    /// Arc length on the circle, in `[0, π]`.
    pub fn arc_distance(&self, other: &Self) -> f64 {
        let c = self.0.dot(&other.0);
        let s = self.0.perp(&other.0);
        s.atan2(c).abs()
    }

    /// Angular distance between the lines, in `[0, π/2]`.
    pub fn proj_distance(&self, other: &Self) -> f64 {
        let d = self.arc_distance(other);
        d.min(PI - d)
    }
}
