use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    config_in_collision, lateral_residual_sq_grad, Configuration, Obstacle, RobotModel, DOF,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionParams {
    /// Weight of the squared displacement from the starting configuration.
    pub lambda: f64,
    /// Trust radius in the scaled configuration norm.
    pub rho: f64,
    pub max_iterations: usize,
    /// Residual norm below which a configuration counts as aimed, meters.
    pub residual_tolerance: f64,
    /// Projected-gradient norm at which the iteration stops.
    pub stationarity_tolerance: f64,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        Self {
            lambda: 0.3,
            rho: 0.05,
            max_iterations: 100,
            residual_tolerance: 1e-3,
            stationarity_tolerance: 1e-9,
        }
    }
}

impl ProjectionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::param("lambda", "must be nonnegative"));
        }
        if !(self.rho > 0.0) {
            return Err(Error::param("rho", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::param("max_iterations", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionStatus {
    Converged,
    IterationLimit,
    InCollision,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub config: Configuration,
    pub status: ProjectionStatus,
    pub iterations: usize,
    pub objective: f64,
    pub initial_residual: f64,
    pub residual: f64,
}

impl Projection {
    pub fn is_success(&self) -> bool {
        self.status == ProjectionStatus::Converged
    }

    pub fn success(&self) -> Option<Configuration> {
        self.is_success().then_some(self.config)
    }

    pub fn is_aimed(&self, params: &ProjectionParams) -> bool {
        self.residual <= params.residual_tolerance
    }
}

/// Objective of the projection as a function of the scaled displacement.
struct Problem<'a> {
    q0: Configuration,
    target: &'a Vector3<f64>,
    robot: &'a RobotModel,
    lambda: f64,
    rho: f64,
    weights: [f64; DOF],
    lo: [f64; DOF],
    hi: [f64; DOF],
}

type Vec5 = [f64; DOF];

const NONMONOTONE_MEMORY: usize = 10;

fn dot(a: &Vec5, b: &Vec5) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &Vec5) -> f64 {
    dot(a, a).sqrt()
}

impl<'a> Problem<'a> {
    fn config(&self, s: &Vec5) -> Configuration {
        let q = self.q0.to_array();
        // heading stays unwrapped here and is wrapped by the constructor
        Configuration::from_array(std::array::from_fn(|i| q[i] + s[i] / self.weights[i]))
    }

    fn eval(&self, s: &Vec5) -> (f64, Vec5) {
        let q = self.config(s);
        let (phi2, g) = lateral_residual_sq_grad(&q, self.target, self.robot);
        let value = phi2 + self.lambda * dot(s, s);
        let grad = std::array::from_fn(|i| g[i] / self.weights[i] + 2.0 * self.lambda * s[i]);
        (value, grad)
    }

    /// Back onto the trust ball, then into the joint box (which contains the origin).
    fn project(&self, s: &Vec5) -> Vec5 {
        let n = norm(s);
        let scale = if n > self.rho { self.rho / n } else { 1.0 };
        std::array::from_fn(|i| (s[i] * scale).clamp(self.lo[i], self.hi[i]))
    }
}

/// Re-aims `q0` at `target` by projected gradient descent inside the trust region.
///
/// Minimizes the squared lateral residual plus `lambda` times the squared
/// scaled displacement with the spectral projected gradient method and a
/// nonmonotone backtracking line search. The result is a success when the iteration
/// becomes stationary within the iteration budget at a collision-free
/// configuration.
pub fn project_to_centroid(
    q0: &Configuration,
    target: &Vector3<f64>,
    obstacles: &[Obstacle],
    robot: &RobotModel,
    params: &ProjectionParams,
) -> Projection {
    let w = robot.metric.weights;
    let mut lo = [f64::NEG_INFINITY; DOF];
    let mut hi = [f64::INFINITY; DOF];
    lo[3] = (robot.pan_limits[0] - q0.pan).min(0.0) * w[3];
    hi[3] = (robot.pan_limits[1] - q0.pan).max(0.0) * w[3];
    lo[4] = (robot.tilt_limits[0] - q0.tilt).min(0.0) * w[4];
    hi[4] = (robot.tilt_limits[1] - q0.tilt).max(0.0) * w[4];
    let prob = Problem {
        q0: *q0,
        target,
        robot,
        lambda: params.lambda,
        rho: params.rho,
        weights: w,
        lo,
        hi,
    };

    let mut s = [0.0; DOF];
    let (mut f, mut g) = prob.eval(&s);
    let initial_residual = f.max(0.0).sqrt();
    let mut recent = std::collections::VecDeque::from([f]);
    let mut step = 1.0;
    let mut status = ProjectionStatus::IterationLimit;
    let mut iterations = 0;
    while iterations < params.max_iterations {
        let pg = prob.project(&std::array::from_fn(|i| s[i] - g[i]));
        let stationarity = norm(&std::array::from_fn(|i| pg[i] - s[i]));
        if stationarity <= params.stationarity_tolerance {
            status = ProjectionStatus::Converged;
            break;
        }
        iterations += 1;
        // spectral projected gradient: feasible direction, nonmonotone backtracking
        let target = prob.project(&std::array::from_fn(|i| s[i] - step * g[i]));
        let dir: Vec5 = std::array::from_fn(|i| target[i] - s[i]);
        let slope = dot(&g, &dir);
        let reference = recent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut a = 1.0;
        let mut accepted = None;
        while a > 1e-12 {
            let cand: Vec5 = std::array::from_fn(|i| s[i] + a * dir[i]);
            let (fc, gc) = prob.eval(&cand);
            if fc <= reference + 1e-4 * a * slope {
                accepted = Some((cand, fc, gc));
                break;
            }
            a *= 0.5;
        }
        let Some((cand, fc, gc)) = accepted else {
            // no representable descent remains
            status = ProjectionStatus::Converged;
            break;
        };
        let d: Vec5 = std::array::from_fn(|i| cand[i] - s[i]);
        let y: Vec5 = std::array::from_fn(|i| gc[i] - g[i]);
        let sy = dot(&d, &y);
        step = if sy > 0.0 {
            (dot(&d, &d) / sy).clamp(1e-10, 1e10)
        } else {
            1e10
        };
        s = cand;
        f = fc;
        g = gc;
        recent.push_back(f);
        if recent.len() > NONMONOTONE_MEMORY {
            recent.pop_front();
        }
    }
    let config = if s.iter().all(|v| *v == 0.0) {
        *q0
    } else {
        prob.config(&s)
    };
    if status == ProjectionStatus::Converged && config_in_collision(&config, obstacles, robot) {
        status = ProjectionStatus::InCollision;
    }
    let residual = crate::geometry::lateral_residual(&config, target, robot).norm();
    Projection {
        config,
        status,
        iterations,
        objective: f,
        initial_residual,
        residual,
    }
}

/// Value of the projection objective at `q`.
pub fn projection_objective(
    q: &Configuration,
    q0: &Configuration,
    target: &Vector3<f64>,
    robot: &RobotModel,
    lambda: f64,
) -> f64 {
    let d = robot.metric.norm(&robot.metric.difference(q0, q));
    crate::geometry::lateral_residual(q, target, robot).norm_squared() + lambda * d * d
}
