//! Perception-aware node sampling: uniform free-space draws, projection onto
//! the aimed-camera manifold, local perturbation and cheapest-candidate choice.

mod projection;

use std::collections::HashSet;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use projection::{
    project_to_centroid, projection_objective, Projection, ProjectionParams, ProjectionStatus,
};

use crate::error::{Error, Result};
use crate::geometry::{
    config_in_collision, forward_kinematics, in_fov, Configuration, Obstacle, RobotModel, DOF,
};
use crate::perception::{batch_cost, CostModel};
use crate::scenegraph::{extract_centroids, Aabb, SceneGraph};
use nalgebra::Vector3;

pub const FREE_SAMPLE_ATTEMPTS: usize = 10_000;
pub const DEFAULT_MAX_RETRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalSamplingParams {
    /// Perturbations drawn per projected configuration.
    pub count: usize,
    /// Per-DoF standard deviations, multiplied by the metric weights.
    pub noise_scales: [f64; DOF],
}

impl Default for LocalSamplingParams {
    fn default() -> Self {
        Self {
            count: 5,
            noise_scales: [1.0; DOF],
        }
    }
}

impl LocalSamplingParams {
    pub fn validate(&self) -> Result<()> {
        if self.noise_scales.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::param("noise_scales", "must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerParams {
    pub projection: ProjectionParams,
    pub local: LocalSamplingParams,
    pub max_retries: usize,
}

impl Default for SamplerParams {
    fn default() -> Self {
        Self {
            projection: ProjectionParams::default(),
            local: LocalSamplingParams::default(),
            max_retries: DEFAULT_MAX_RETRIES,
        }
    }
}

impl SamplerParams {
    pub fn validate(&self) -> Result<()> {
        self.projection.validate()?;
        self.local.validate()?;
        if self.max_retries == 0 {
            return Err(Error::param("max_retries", "must be at least 1"));
        }
        Ok(())
    }
}

/// Uniform draw over the workspace footprint and joint ranges, rejected until collision-free.
pub fn sample_free<R: Rng + ?Sized>(
    bounds: &Aabb,
    obstacles: &[Obstacle],
    robot: &RobotModel,
    rng: &mut R,
) -> Result<Configuration> {
    let [pan_lo, pan_hi] = robot.pan_limits;
    let [tilt_lo, tilt_hi] = robot.tilt_limits;
    for _ in 0..FREE_SAMPLE_ATTEMPTS {
        let q = Configuration::new(
            rng.random_range(bounds.min.x..=bounds.max.x),
            rng.random_range(bounds.min.y..=bounds.max.y),
            rng.random_range(-PI..=PI),
            rng.random_range(pan_lo..=pan_hi),
            rng.random_range(tilt_lo..=tilt_hi),
        );
        if !config_in_collision(&q, obstacles, robot) {
            return Ok(q);
        }
    }
    Err(Error::SamplingFailed {
        attempts: FREE_SAMPLE_ATTEMPTS,
        reason: "free space too small for rejection sampling",
    })
}

/// Gaussian perturbations of `q_proj` that stay free, feasible and keep `target` in view.
///
/// `q_proj` always comes first; exact duplicates are dropped.
pub fn local_sample<R: Rng + ?Sized>(
    q_proj: &Configuration,
    target: &Vector3<f64>,
    obstacles: &[Obstacle],
    robot: &RobotModel,
    params: &LocalSamplingParams,
    rng: &mut R,
) -> Vec<Configuration> {
    let w = robot.metric.weights;
    let mut out = vec![*q_proj];
    let mut seen = HashSet::from([q_proj.bits()]);
    for _ in 0..params.count {
        let base = q_proj.to_array();
        let q = Configuration::from_array(std::array::from_fn(|i| {
            let sd = params.noise_scales[i] * w[i];
            let n: f64 = Normal::new(0.0, 1.0).unwrap().sample(rng);
            base[i] + sd * n
        }));
        if !robot.within_limits(&q) || config_in_collision(&q, obstacles, robot) {
            continue;
        }
        let Ok(cam) = forward_kinematics(&q, robot) else {
            continue;
        };
        if in_fov(&cam, target, robot) && seen.insert(q.bits()) {
            out.push(q);
        }
    }
    out
}

/// Index and value of the candidate with the lowest aggregate cost; ties go to the earliest.
pub fn select_node(
    candidates: &[Configuration],
    scene: &SceneGraph,
    robot: &RobotModel,
    model: &CostModel,
) -> Result<(usize, Configuration, f64)> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("no candidate configurations"));
    }
    let costs = batch_cost(candidates, scene, robot, model)?;
    let best = argmin(&costs);
    Ok((best, candidates[best], costs[best]))
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Full perception-aware node draw.
///
/// A uniform free sample is projected toward every centroid of the monitored
/// objects (singles, pairs and the whole set); each successful projection is
/// perturbed locally and the cheapest candidate of the union is returned.
/// When every projection fails the draw starts over.
pub fn perception_aware_sample<R: Rng + ?Sized>(
    scene: &SceneGraph,
    robot: &RobotModel,
    model: &CostModel,
    params: &SamplerParams,
    rng: &mut R,
) -> Result<Configuration> {
    let centroids = extract_centroids(scene.monitored())?;
    if centroids.is_empty() {
        return Err(Error::EmptyInput("scene has no monitored objects"));
    }
    for _ in 0..params.max_retries {
        let q0 = sample_free(&scene.workspace, &scene.obstacles, robot, rng)?;
        let mut candidates = Vec::new();
        for c in centroids.points() {
            let proj = project_to_centroid(&q0, c, &scene.obstacles, robot, &params.projection);
            if let Some(qp) = proj.success() {
                candidates.extend(local_sample(
                    &qp,
                    c,
                    &scene.obstacles,
                    robot,
                    &params.local,
                    rng,
                ));
            }
        }
        if !candidates.is_empty() {
            return select_node(&candidates, scene, robot, model).map(|(_, q, _)| q);
        }
    }
    Err(Error::SamplingFailed {
        attempts: params.max_retries,
        reason: "every projection failed",
    })
}
