//! Local motions between configurations and their discretization.

pub mod reeds_shepp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{config_in_collision, ConfigMetric, Configuration, Obstacle, RobotModel};
use reeds_shepp::BasePath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteeringKind {
    StraightLine,
    ReedsShepp,
}

impl SteeringKind {
    /// Whether the motion cost depends on direction, making the roadmap directed.
    pub fn is_directed(self) -> bool {
        matches!(self, SteeringKind::ReedsShepp)
    }
}

impl std::fmt::Display for SteeringKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SteeringKind::StraightLine => "straight_line",
            SteeringKind::ReedsShepp => "reeds_shepp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringParams {
    pub kind: SteeringKind,
    /// Turning radius of the base, meters (Reeds-Shepp only).
    pub turning_radius: f64,
    /// Maximum base travel between collision checks, meters.
    pub collision_resolution: f64,
}

impl Default for SteeringParams {
    fn default() -> Self {
        Self {
            kind: SteeringKind::StraightLine,
            turning_radius: 0.5,
            collision_resolution: 0.05,
        }
    }
}

impl SteeringParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.turning_radius > 0.0) {
            return Err(Error::param("turning_radius", "must be positive"));
        }
        if !(self.collision_resolution > 0.0) {
            return Err(Error::param("collision_resolution", "must be positive"));
        }
        Ok(())
    }

    pub fn steer(
        &self,
        from: &Configuration,
        to: &Configuration,
        metric: &ConfigMetric,
    ) -> LocalMotion {
        match self.kind {
            SteeringKind::StraightLine => straight_line(from, to, metric),
            SteeringKind::ReedsShepp => reeds_shepp(from, to, self.turning_radius, metric),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Straight,
    ReedsShepp(BasePath),
}

/// A local motion between two configurations, parameterized on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMotion {
    pub start: Configuration,
    pub end: Configuration,
    /// Motion cost of the edge.
    pub length: f64,
    shape: Shape,
}

/// Linear interpolation in every DoF, heading along the short arc.
pub fn straight_line(
    from: &Configuration,
    to: &Configuration,
    metric: &ConfigMetric,
) -> LocalMotion {
    LocalMotion {
        start: *from,
        end: *to,
        length: metric.distance(from, to),
        shape: Shape::Straight,
    }
}

/// Shortest Reeds-Shepp base path with pan and tilt interpolated along it.
///
/// The cost is the base path length plus the weighted norm of the camera
/// joint displacement.
pub fn reeds_shepp(
    from: &Configuration,
    to: &Configuration,
    turning_radius: f64,
    metric: &ConfigMetric,
) -> LocalMotion {
    let base = BasePath::between(
        (from.x, from.y, from.theta),
        (to.x, to.y, to.theta),
        turning_radius,
    );
    let w = &metric.weights;
    let joints = (w[3] * (to.pan - from.pan)).hypot(w[4] * (to.tilt - from.tilt));
    LocalMotion {
        start: *from,
        end: *to,
        length: base.length() + joints,
        shape: Shape::ReedsShepp(base),
    }
}

impl LocalMotion {
    pub fn kind(&self) -> SteeringKind {
        match self.shape {
            Shape::Straight => SteeringKind::StraightLine,
            Shape::ReedsShepp(_) => SteeringKind::ReedsShepp,
        }
    }

    /// Distance travelled by the base, meters.
    pub fn base_length(&self) -> f64 {
        match &self.shape {
            Shape::Straight => (self.end.x - self.start.x).hypot(self.end.y - self.start.y),
            Shape::ReedsShepp(p) => p.length(),
        }
    }

    /// Configuration at parameter `t`; the endpoints are returned exactly.
    pub fn sample(&self, t: f64) -> Configuration {
        if t <= 0.0 {
            return self.start;
        }
        if t >= 1.0 {
            return self.end;
        }
        match &self.shape {
            Shape::Straight => ConfigMetric::default().interpolate(&self.start, &self.end, t),
            Shape::ReedsShepp(p) => {
                let (x, y, theta) = p.pose_at(t);
                Configuration::new(
                    x,
                    y,
                    theta,
                    self.start.pan + t * (self.end.pan - self.start.pan),
                    self.start.tilt + t * (self.end.tilt - self.start.tilt),
                )
            }
        }
    }
}

/// Waypoints at `t = k / K` for `k = 0..=K`.
pub fn discretize(motion: &LocalMotion, intervals: usize) -> Result<Vec<(f64, Configuration)>> {
    if intervals < 2 {
        return Err(Error::param("discretization", "must be at least 2"));
    }
    Ok((0..=intervals)
        .map(|k| {
            let t = k as f64 / intervals as f64;
            (t, motion.sample(t))
        })
        .collect())
}

/// Checks the base disc at waypoints no further apart than `resolution` in base arc length.
pub fn motion_collision_free(
    motion: &LocalMotion,
    obstacles: &[Obstacle],
    robot: &RobotModel,
    resolution: f64,
) -> bool {
    let steps = (motion.base_length() / resolution).ceil().max(1.0) as usize;
    (0..=steps).all(|i| {
        let q = motion.sample(i as f64 / steps as f64);
        !config_in_collision(&q, obstacles, robot)
    })
}
