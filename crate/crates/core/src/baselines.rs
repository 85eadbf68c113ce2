//! Comparison planners that differ from the multi-object planner only in
//! their node sampler and perception channel.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{forward_kinematics, Configuration, RobotModel};
use crate::perception::{perception_cost_of, CostModel};
use crate::roadmap::{integrate_along, NodeStrategy, PlanningContext};
use crate::sampling::{project_to_centroid, sample_free, ProjectionParams, DEFAULT_MAX_RETRIES};
use crate::scenegraph::{ObjectNode, SceneGraph};
use crate::steering::LocalMotion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    ClosestObjectLowDof,
    ClosestObject,
    LowestCostObject,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [
        BaselineKind::ClosestObjectLowDof,
        BaselineKind::ClosestObject,
        BaselineKind::LowestCostObject,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::ClosestObjectLowDof => "closest_object_low_dof",
            BaselineKind::ClosestObject => "closest_object",
            BaselineKind::LowestCostObject => "lowest_cost_object",
        }
    }
}

impl std::fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn first_min<'a>(scored: impl Iterator<Item = (f64, &'a ObjectNode)>) -> Option<&'a ObjectNode> {
    // ties go to the smaller id
    scored
        .min_by(|(a, x), (b, y)| a.total_cmp(b).then_with(|| x.id.cmp(&y.id)))
        .map(|(_, o)| o)
}

/// Monitored object whose centroid is nearest to the camera center.
pub fn closest_object_target<'a>(
    q: &Configuration,
    scene: &'a SceneGraph,
    robot: &RobotModel,
) -> Result<&'a ObjectNode> {
    let cam = forward_kinematics(q, robot)?;
    first_min(
        scene
            .monitored()
            .map(|o| ((o.centroid - cam.center).norm(), o)),
    )
    .ok_or(Error::EmptyInput("scene has no monitored objects"))
}

/// Monitored object with the lowest unweighted perception cost at `q`.
pub fn lowest_cost_target<'a>(
    q: &Configuration,
    scene: &'a SceneGraph,
    robot: &RobotModel,
    model: &CostModel,
) -> Result<&'a ObjectNode> {
    let scored = scene
        .monitored()
        .map(|o| Ok((perception_cost_of(q, o, scene, robot, model)?, o)))
        .collect::<Result<Vec<_>>>()?;
    first_min(scored.into_iter()).ok_or(Error::EmptyInput("scene has no monitored objects"))
}

/// Distance from the camera center to the nearest monitored centroid.
pub fn nearest_object_distance(
    q: &Configuration,
    scene: &SceneGraph,
    robot: &RobotModel,
) -> Result<f64> {
    let cam = forward_kinematics(q, robot)?;
    scene
        .monitored()
        .map(|o| (o.centroid - cam.center).norm())
        .min_by(f64::total_cmp)
        .ok_or(Error::EmptyInput("scene has no monitored objects"))
}

/// Lowest unweighted perception cost over the monitored objects.
pub fn lowest_object_cost(
    q: &Configuration,
    scene: &SceneGraph,
    robot: &RobotModel,
    model: &CostModel,
) -> Result<f64> {
    let o = lowest_cost_target(q, scene, robot, model)?;
    perception_cost_of(q, o, scene, robot, model)
}

/// Sampler and perception channel of one baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineStrategy {
    pub kind: BaselineKind,
    pub projection: ProjectionParams,
    pub max_retries: usize,
    /// Camera joints of the low-DoF baseline.
    pub rest_pan: f64,
    pub rest_tilt: f64,
}

impl BaselineStrategy {
    pub fn new(kind: BaselineKind) -> Self {
        Self {
            kind,
            projection: ProjectionParams::default(),
            max_retries: DEFAULT_MAX_RETRIES,
            rest_pan: 0.0,
            rest_tilt: 0.0,
        }
    }
}

impl NodeStrategy for BaselineStrategy {
    fn name(&self) -> &'static str {
        self.kind.name()
    }

    fn sample(&self, ctx: &PlanningContext, rng: &mut ChaCha8Rng) -> Result<Configuration> {
        baseline_sample(self, ctx, rng)
    }

    fn point_cost(&self, ctx: &PlanningContext, q: &Configuration) -> Result<f64> {
        match self.kind {
            BaselineKind::ClosestObjectLowDof | BaselineKind::ClosestObject => {
                nearest_object_distance(q, ctx.scene, ctx.robot)
            }
            BaselineKind::LowestCostObject => {
                lowest_object_cost(q, ctx.scene, ctx.robot, ctx.model)
            }
        }
    }
}

/// Draws one node for a baseline.
///
/// The low-DoF kind samples the base only, with the camera joints at rest.
/// The other kinds project a uniform free sample toward the centroid of the
/// single object they select, retrying when the projection fails.
pub fn baseline_sample(
    strategy: &BaselineStrategy,
    ctx: &PlanningContext,
    rng: &mut ChaCha8Rng,
) -> Result<Configuration> {
    let (scene, robot) = (ctx.scene, ctx.robot);
    if scene.monitored_count() == 0 {
        return Err(Error::EmptyInput("scene has no monitored objects"));
    }
    if strategy.kind == BaselineKind::ClosestObjectLowDof {
        let q = sample_free(&scene.workspace, &scene.obstacles, robot, rng)?;
        // the base footprint alone decides collisions, so the joints can be reset freely
        return Ok(Configuration {
            pan: strategy.rest_pan,
            tilt: strategy.rest_tilt,
            ..q
        });
    }
    for _ in 0..strategy.max_retries {
        let q0 = sample_free(&scene.workspace, &scene.obstacles, robot, rng)?;
        let target = match strategy.kind {
            BaselineKind::LowestCostObject => lowest_cost_target(&q0, scene, robot, ctx.model)?,
            _ => closest_object_target(&q0, scene, robot)?,
        };
        let proj = project_to_centroid(
            &q0,
            &target.centroid,
            &scene.obstacles,
            robot,
            &strategy.projection,
        );
        if let Some(q) = proj.success() {
            return Ok(q);
        }
    }
    Err(Error::SamplingFailed {
        attempts: strategy.max_retries,
        reason: "every projection failed",
    })
}

/// Perception channel of a baseline integrated along an edge.
pub fn baseline_edge_perception(
    strategy: &BaselineStrategy,
    motion: &LocalMotion,
    ctx: &PlanningContext,
    intervals: usize,
) -> Result<f64> {
    integrate_along(motion, intervals, |q| strategy.point_cost(ctx, q))
}
