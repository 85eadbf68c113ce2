use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

/// Number of degrees of freedom: planar base pose plus camera pan and tilt.
pub const DOF: usize = 5;

/// Wraps an angle into `(-pi, pi]`.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = PI - (PI - a).rem_euclid(TAU);
    // rem_euclid can return TAU for tiny negative inputs
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// Robot state: base pose `(x, y, theta)` and camera joints `(pan, tilt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub pan: f64,
    pub tilt: f64,
}

impl Configuration {
    /// Builds a configuration, wrapping the heading into `(-pi, pi]`.
    pub fn new(x: f64, y: f64, theta: f64, pan: f64, tilt: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
            pan,
            tilt,
        }
    }

    pub fn to_array(&self) -> [f64; DOF] {
        [self.x, self.y, self.theta, self.pan, self.tilt]
    }

    pub fn from_array(a: [f64; DOF]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Bitwise identity, used for deduplication.
    pub fn bits(&self) -> [u64; DOF] {
        self.to_array().map(f64::to_bits)
    }
}

/// Weighted Euclidean metric on configurations.
///
/// Positions are in meters, angular DoFs are multiplied by their weight. The
/// heading is differenced on the circle; pan and tilt are bounded joints and
/// are differenced linearly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigMetric {
    pub weights: [f64; DOF],
}

impl Default for ConfigMetric {
    fn default() -> Self {
        Self {
            weights: [1.0, 1.0, 0.5, 0.25, 0.25],
        }
    }
}

impl ConfigMetric {
    /// Per-DoF difference `b - a` with the heading taken along the shortest arc.
    pub fn difference(&self, a: &Configuration, b: &Configuration) -> [f64; DOF] {
        [
            b.x - a.x,
            b.y - a.y,
            wrap_angle(b.theta - a.theta),
            b.pan - a.pan,
            b.tilt - a.tilt,
        ]
    }

    /// Scaled norm of a raw difference vector.
    pub fn norm(&self, d: &[f64; DOF]) -> f64 {
        d.iter()
            .zip(self.weights.iter())
            .map(|(v, w)| (v * w) * (v * w))
            .sum::<f64>()
            .sqrt()
    }

    pub fn distance(&self, a: &Configuration, b: &Configuration) -> f64 {
        self.norm(&self.difference(a, b))
    }

    /// Moves from `a` along a raw difference vector; the heading is re-wrapped.
    pub fn offset(&self, a: &Configuration, d: &[f64; DOF]) -> Configuration {
        Configuration::new(
            a.x + d[0],
            a.y + d[1],
            a.theta + d[2],
            a.pan + d[3],
            a.tilt + d[4],
        )
    }

    /// Linear interpolation along the shortest arc in heading.
    pub fn interpolate(&self, a: &Configuration, b: &Configuration, t: f64) -> Configuration {
        if t <= 0.0 {
            return *a;
        }
        if t >= 1.0 {
            return *b;
        }
        let d = self.difference(a, b);
        Configuration::new(
            a.x + t * d[0],
            a.y + t * d[1],
            a.theta + t * d[2],
            a.pan + t * d[3],
            a.tilt + t * d[4],
        )
    }

    /// Coordinates in the scaled space, heading included unwrapped in `(-pi w, pi w]`.
    pub fn scaled(&self, q: &Configuration) -> [f64; DOF] {
        let a = q.to_array();
        std::array::from_fn(|i| a[i] * self.weights[i])
    }

    /// Period of the heading axis in the scaled space.
    pub fn heading_period(&self) -> f64 {
        TAU * self.weights[2]
    }
}
