use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::config::Configuration;
use super::robot::{CameraPose, RobotModel};
use crate::error::{Error, Result};

/// Static obstacle: an axis-aligned box or a vertical cylinder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Obstacle {
    Box {
        min: Vector3<f64>,
        max: Vector3<f64>,
    },
    /// `base` is the center of the bottom face.
    Cylinder {
        base: Vector3<f64>,
        radius: f64,
        height: f64,
    },
}

impl Obstacle {
    pub fn validate(&self) -> Result<()> {
        match self {
            Obstacle::Box { min, max } => {
                if (0..3).any(|i| !(min[i] <= max[i])) {
                    return Err(Error::scene(
                        "obstacles.min",
                        "min corner exceeds max corner",
                    ));
                }
            }
            Obstacle::Cylinder { radius, height, .. } => {
                if !(*radius > 0.0) {
                    return Err(Error::scene("obstacles.radius", "must be positive"));
                }
                if !(*height >= 0.0) {
                    return Err(Error::scene("obstacles.height", "must be nonnegative"));
                }
            }
        }
        Ok(())
    }

    /// Parameter interval `[t0, t1]` where the line `a + t (b - a)` lies inside, if any.
    fn line_interval(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> Option<(f64, f64)> {
        let d = b - a;
        match self {
            Obstacle::Box { min, max } => {
                let mut t0 = f64::NEG_INFINITY;
                let mut t1 = f64::INFINITY;
                for i in 0..3 {
                    if d[i] == 0.0 {
                        if a[i] < min[i] || a[i] > max[i] {
                            return None;
                        }
                    } else {
                        let inv = 1.0 / d[i];
                        let (mut lo, mut hi) = ((min[i] - a[i]) * inv, (max[i] - a[i]) * inv);
                        if lo > hi {
                            std::mem::swap(&mut lo, &mut hi);
                        }
                        t0 = t0.max(lo);
                        t1 = t1.min(hi);
                        if t0 > t1 {
                            return None;
                        }
                    }
                }
                Some((t0, t1))
            }
            Obstacle::Cylinder {
                base,
                radius,
                height,
            } => {
                let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
                let (zlo, zhi) = (base.z, base.z + height);
                if d.z == 0.0 {
                    if a.z < zlo || a.z > zhi {
                        return None;
                    }
                } else {
                    let (mut lo, mut hi) = ((zlo - a.z) / d.z, (zhi - a.z) / d.z);
                    if lo > hi {
                        std::mem::swap(&mut lo, &mut hi);
                    }
                    t0 = lo;
                    t1 = hi;
                }
                let (px, py) = (a.x - base.x, a.y - base.y);
                let qa = d.x * d.x + d.y * d.y;
                let qc = px * px + py * py - radius * radius;
                if qa == 0.0 {
                    if qc > 0.0 {
                        return None;
                    }
                } else {
                    let qb = 2.0 * (px * d.x + py * d.y);
                    let disc = qb * qb - 4.0 * qa * qc;
                    if disc < 0.0 {
                        return None;
                    }
                    let sq = disc.sqrt();
                    t0 = t0.max((-qb - sq) / (2.0 * qa));
                    t1 = t1.min((-qb + sq) / (2.0 * qa));
                }
                (t0 <= t1).then_some((t0, t1))
            }
        }
    }

    /// Whether the open segment between `a` and `b` passes through the obstacle.
    pub fn blocks_segment(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
        // canonical endpoint order makes the test exactly symmetric
        let (a, b) = if lexicographic_le(a, b) {
            (a, b)
        } else {
            (b, a)
        };
        match self.line_interval(a, b) {
            Some((t0, t1)) => {
                let lo = t0.max(0.0);
                let hi = t1.min(1.0);
                lo <= hi && hi > 0.0 && lo < 1.0
            }
            None => false,
        }
    }

    /// Whether a point lies inside the closed obstacle.
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        match self {
            Obstacle::Box { min, max } => (0..3).all(|i| p[i] >= min[i] && p[i] <= max[i]),
            Obstacle::Cylinder {
                base,
                radius,
                height,
            } => {
                p.z >= base.z
                    && p.z <= base.z + height
                    && (p.x - base.x).hypot(p.y - base.y) <= *radius
            }
        }
    }

    /// Distance from a ground-plane point to the obstacle footprint (0 inside).
    pub fn footprint_distance(&self, x: f64, y: f64) -> f64 {
        match self {
            Obstacle::Box { min, max } => {
                let dx = (min.x - x).max(0.0).max(x - max.x);
                let dy = (min.y - y).max(0.0).max(y - max.y);
                dx.hypot(dy)
            }
            Obstacle::Cylinder { base, radius, .. } => {
                ((x - base.x).hypot(y - base.y) - radius).max(0.0)
            }
        }
    }
}

fn lexicographic_le(a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
    for i in 0..3 {
        if a[i] != b[i] {
            return a[i] < b[i];
        }
    }
    true
}

/// Whether any obstacle blocks the line of sight from the camera center to `point`.
///
/// Objects of interest are not obstacles, so an observed object never occludes itself.
pub fn occluded(cam: &CameraPose, point: &Vector3<f64>, obstacles: &[Obstacle]) -> bool {
    obstacles
        .iter()
        .any(|o| o.blocks_segment(&cam.center, point))
}

/// Whether the base disc overlaps the ground-plane footprint of any obstacle.
pub fn config_in_collision(q: &Configuration, obstacles: &[Obstacle], robot: &RobotModel) -> bool {
    obstacles
        .iter()
        .any(|o| o.footprint_distance(q.x, q.y) < robot.base_radius)
}
