//! Planning problems, path evaluation, method comparison and scaling sweeps.

mod metrics;

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use metrics::{
    evaluate_path, frame_configurations, record_frames, summarize_frames, tracked_fraction,
    EvalParams, FrameRecord, PathMetrics,
};

use crate::baselines::{BaselineKind, BaselineStrategy};
use crate::error::{Error, Result};
use crate::geometry::{config_in_collision, Configuration, RobotModel};
use crate::perception::CostModel;
use crate::roadmap::{
    build_roadmap, GoalSpec, MultiObjectStrategy, NodeStrategy, PlannerParams, PlanningContext,
    Roadmap,
};
use crate::sampling::{SamplerParams, FREE_SAMPLE_ATTEMPTS};
use crate::scenegraph::SceneGraph;
use crate::search::{plan, PathResult, PlanParams};
use crate::steering::SteeringParams;

/// A planning method: the multi-object planner or one of the baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MultiObject,
    ClosestObjectLowDof,
    ClosestObject,
    LowestCostObject,
}

impl Method {
    /// Baselines first, as in the comparison table.
    pub const ALL: [Method; 4] = [
        Method::ClosestObjectLowDof,
        Method::ClosestObject,
        Method::LowestCostObject,
        Method::MultiObject,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::MultiObject => "multi_object",
            Method::ClosestObjectLowDof => BaselineKind::ClosestObjectLowDof.name(),
            Method::ClosestObject => BaselineKind::ClosestObject.name(),
            Method::LowestCostObject => BaselineKind::LowestCostObject.name(),
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::param("method", format!("unknown method `{name}`")))
    }

    pub fn strategy(self, sampler: &SamplerParams) -> Box<dyn NodeStrategy> {
        let baseline = |kind| {
            Box::new(BaselineStrategy {
                projection: sampler.projection,
                max_retries: sampler.max_retries,
                ..BaselineStrategy::new(kind)
            })
        };
        match self {
            Method::MultiObject => Box::new(MultiObjectStrategy { sampler: *sampler }),
            Method::ClosestObjectLowDof => baseline(BaselineKind::ClosestObjectLowDof),
            Method::ClosestObject => baseline(BaselineKind::ClosestObject),
            Method::LowestCostObject => baseline(BaselineKind::LowestCostObject),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub start: Configuration,
    pub goal: Configuration,
}

fn sample_in_half<R: Rng>(
    scene: &SceneGraph,
    robot: &RobotModel,
    axis: usize,
    range: (f64, f64),
    rng: &mut R,
) -> Result<Configuration> {
    let (lo, hi) = (scene.workspace.min, scene.workspace.max);
    for _ in 0..FREE_SAMPLE_ATTEMPTS {
        let along = rng.random_range(range.0..range.1);
        let across = if axis == 0 {
            rng.random_range(lo.y..hi.y)
        } else {
            rng.random_range(lo.x..hi.x)
        };
        let (x, y) = if axis == 0 {
            (along, across)
        } else {
            (across, along)
        };
        let q = Configuration::new(x, y, rng.random_range(-PI..PI), 0.0, 0.0);
        if !config_in_collision(&q, &scene.obstacles, robot) {
            return Ok(q);
        }
    }
    Err(Error::SamplingFailed {
        attempts: FREE_SAMPLE_ATTEMPTS,
        reason: "no free configuration in a workspace half",
    })
}

/// Start and goal pairs on opposite sides of the workspace's longer horizontal axis.
pub fn generate_problems(
    scene: &SceneGraph,
    robot: &RobotModel,
    count: usize,
    seed: u64,
) -> Result<Vec<Problem>> {
    let size = scene.workspace.size();
    let axis = if size.x >= size.y { 0 } else { 1 };
    let (lo, hi) = (scene.workspace.min[axis], scene.workspace.max[axis]);
    let mid = 0.5 * (lo + hi);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let flip = rng.random_bool(0.5);
            let (a, b) = if flip {
                ((mid, hi), (lo, mid))
            } else {
                ((lo, mid), (mid, hi))
            };
            Ok(Problem {
                start: sample_in_half(scene, robot, axis, a, &mut rng)?,
                goal: sample_in_half(scene, robot, axis, b, &mut rng)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub methods: Vec<Method>,
    pub planner: PlannerParams,
    pub steering: SteeringParams,
    pub sampler: SamplerParams,
    pub eval: EvalParams,
    pub problems: usize,
    pub seed: u64,
    /// Record wall-clock times; when false they are written as 0 so output is reproducible.
    pub record_timing: bool,
}

impl ScenarioSpec {
    pub fn new(name: impl Into<String>, problems: usize, seed: u64) -> Self {
        Self {
            name: name.into(),
            methods: Method::ALL.to_vec(),
            planner: PlannerParams::default(),
            steering: SteeringParams::default(),
            sampler: SamplerParams::default(),
            eval: EvalParams::default(),
            problems,
            seed,
            record_timing: false,
        }
    }
}

/// One row of the metrics table; `problem_index` is `None` on aggregate rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: String,
    pub scenario: String,
    pub problem_index: Option<usize>,
    /// 1 or 0 per problem; the solve rate on aggregate rows.
    pub solved: f64,
    pub avg_detected_objects: Option<f64>,
    pub track_rate: Option<f64>,
    pub avg_confidence: Option<f64>,
    pub scaled_avg_confidence: Option<f64>,
    pub path_length: Option<f64>,
    pub build_time_s: f64,
    pub plan_time_s: Option<f64>,
    pub seed: u64,
    pub failure_reason: Option<String>,
}

pub const METRICS_COLUMNS: [&str; 12] = [
    "method",
    "scenario",
    "problem_index",
    "solved",
    "avg_detected_objects",
    "track_rate",
    "avg_confidence",
    "scaled_avg_confidence",
    "path_length",
    "build_time_s",
    "plan_time_s",
    "seed",
];

/// Outcome of one method on one problem.
#[derive(Debug, Clone)]
pub struct ProblemOutcome {
    pub path: Option<PathResult>,
    pub metrics: Option<PathMetrics>,
    pub failure: Option<String>,
}

/// Plans and evaluates every problem on one roadmap, in problem order.
pub fn solve_problems(
    roadmap: &Roadmap,
    ctx: &PlanningContext,
    strategy: &dyn NodeStrategy,
    problems: &[Problem],
    alpha: f64,
    eval: &EvalParams,
) -> Vec<ProblemOutcome> {
    let params = PlanParams {
        alpha,
        ..Default::default()
    };
    problems
        .par_iter()
        .map(|p| {
            let solved = plan(
                roadmap,
                ctx,
                strategy,
                &p.start,
                &GoalSpec::Configuration(p.goal),
                &params,
            )
            .and_then(|path| Ok((evaluate_path(&path, ctx.scene, ctx.robot, eval)?, path)));
            match solved {
                Ok((m, path)) => ProblemOutcome {
                    path: Some(path),
                    metrics: Some(m),
                    failure: None,
                },
                Err(e) => ProblemOutcome {
                    path: None,
                    metrics: None,
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Rows for one method: one per problem, then the aggregate over solved problems.
///
/// The aggregate confidence pools all detections, so its scaled confidence
/// equals both the product of the aggregate columns and the mean of the
/// per-problem scaled confidences.
pub fn method_rows(
    method: &str,
    spec: &ScenarioSpec,
    build_time_s: f64,
    outcomes: &[ProblemOutcome],
) -> Vec<MetricsRow> {
    let timing = |t: f64| if spec.record_timing { t } else { 0.0 };
    let mut rows: Vec<MetricsRow> = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| MetricsRow {
            method: method.to_string(),
            scenario: spec.name.clone(),
            problem_index: Some(i),
            solved: if o.metrics.is_some() { 1.0 } else { 0.0 },
            avg_detected_objects: o.metrics.map(|m| m.avg_detected_objects),
            track_rate: o.metrics.map(|m| m.track_rate),
            avg_confidence: o.metrics.map(|m| m.avg_confidence),
            scaled_avg_confidence: o.metrics.map(|m| m.scaled_avg_confidence),
            path_length: o.metrics.map(|m| m.path_length),
            build_time_s: timing(build_time_s),
            plan_time_s: o.path.as_ref().map(|p| timing(p.plan_time_s)),
            seed: spec.seed,
            failure_reason: o.failure.clone(),
        })
        .collect();
    let solved: Vec<&PathMetrics> = outcomes.iter().filter_map(|o| o.metrics.as_ref()).collect();
    let d = mean(solved.iter().map(|m| m.avg_detected_objects));
    let detections: usize = solved.iter().map(|m| m.detections).sum();
    let c = (!solved.is_empty()).then(|| {
        if detections > 0 {
            solved.iter().map(|m| m.score_sum).sum::<f64>() / detections as f64
        } else {
            0.0
        }
    });
    rows.push(MetricsRow {
        method: method.to_string(),
        scenario: spec.name.clone(),
        problem_index: None,
        solved: if outcomes.is_empty() {
            0.0
        } else {
            solved.len() as f64 / outcomes.len() as f64
        },
        avg_detected_objects: d,
        track_rate: mean(solved.iter().map(|m| m.track_rate)),
        avg_confidence: c,
        scaled_avg_confidence: d.zip(c).map(|(d, c)| d * c),
        path_length: mean(solved.iter().map(|m| m.path_length)),
        build_time_s: timing(build_time_s),
        plan_time_s: mean(
            outcomes
                .iter()
                .filter_map(|o| o.path.as_ref())
                .map(|p| timing(p.plan_time_s)),
        ),
        seed: spec.seed,
        failure_reason: None,
    });
    rows
}

/// Builds a roadmap per method and evaluates it on a shared problem set.
///
/// Per-problem failures become rows; only setup errors abort the run.
pub fn run_benchmark(ctx: &PlanningContext, spec: &ScenarioSpec) -> Result<Vec<MetricsRow>> {
    if spec.problems == 0 {
        return Ok(Vec::new());
    }
    let problems = generate_problems(ctx.scene, ctx.robot, spec.problems, spec.seed)?;
    let mut rows = Vec::new();
    for method in &spec.methods {
        let strategy = method.strategy(&spec.sampler);
        let roadmap = build_roadmap(
            ctx,
            strategy.as_ref(),
            &spec.steering,
            &spec.planner,
            spec.seed,
        )?;
        let outcomes = solve_problems(
            &roadmap,
            ctx,
            strategy.as_ref(),
            &problems,
            spec.planner.alpha,
            &spec.eval,
        );
        log::info!(
            "{method}: {} nodes, {} edges, {}/{} solved",
            roadmap.nodes.len(),
            roadmap.edges.len(),
            outcomes.iter().filter(|o| o.metrics.is_some()).count(),
            outcomes.len()
        );
        rows.extend(method_rows(
            method.name(),
            spec,
            roadmap.metadata.build_time_s,
            &outcomes,
        ));
    }
    Ok(rows)
}

/// The aggregate row of a method, if present.
pub fn aggregate_row<'a>(rows: &'a [MetricsRow], method: &str) -> Option<&'a MetricsRow> {
    rows.iter()
        .find(|r| r.method == method && r.problem_index.is_none())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_metrics_csv(rows: &[MetricsRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(METRICS_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.scenario.clone(),
            r.problem_index
                .map_or_else(|| "all".to_string(), |i| i.to_string()),
            r.solved.to_string(),
            fmt_opt(r.avg_detected_objects),
            fmt_opt(r.track_rate),
            fmt_opt(r.avg_confidence),
            fmt_opt(r.scaled_avg_confidence),
            fmt_opt(r.path_length),
            r.build_time_s.to_string(),
            fmt_opt(r.plan_time_s),
            r.seed.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// JSON mirror of the CSV table; failure reasons are included here.
pub fn write_metrics_json(rows: &[MetricsRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serde_json::to_string_pretty(rows)?).map_err(|e| Error::io(path, e))
}

pub fn read_metrics_json(path: impl AsRef<Path>) -> Result<Vec<MetricsRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    /// Node budgets swept at `fixed_objects` monitored objects.
    pub node_counts: Vec<usize>,
    /// Monitored-object counts swept at `fixed_nodes` nodes.
    pub object_counts: Vec<usize>,
    pub fixed_objects: usize,
    pub fixed_nodes: usize,
    pub seeds: Vec<u64>,
    pub problems: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            node_counts: vec![50, 150, 300],
            object_counts: vec![2, 5, 8],
            fixed_objects: 5,
            fixed_nodes: 300,
            seeds: (0..5).collect(),
            problems: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// `nodes` or `objects`: which parameter the row's series varies.
    pub series: String,
    pub nodes: usize,
    pub objects: usize,
    pub seed: u64,
    pub build_time_s: f64,
    pub plan_time_s: f64,
    pub avg_detected_objects: f64,
    pub solved: usize,
}

/// Multi-object planner over node budgets at fixed object count, then over
/// object counts at a fixed node budget. Objects are the first monitored ids.
pub fn run_scaling_sweep(
    ctx: &PlanningContext,
    grid: &SweepGrid,
    base: &ScenarioSpec,
) -> Result<Vec<SweepRow>> {
    if grid.node_counts.is_empty() && grid.object_counts.is_empty() {
        return Err(Error::EmptyInput("sweep grid"));
    }
    let available = ctx.scene.monitored_count();
    let cells = grid
        .node_counts
        .iter()
        .map(|&p| ("nodes", p, grid.fixed_objects))
        .chain(
            grid.object_counts
                .iter()
                .map(|&n| ("objects", grid.fixed_nodes, n)),
        );
    let mut rows = Vec::new();
    for (series, nodes, objects) in cells {
        if objects == 0 || objects > available {
            return Err(Error::param(
                "objects",
                format!("{objects} requested, scene monitors {available}"),
            ));
        }
        let scene = ctx.scene.with_first_monitored(objects);
        let sub = PlanningContext {
            scene: &scene,
            ..*ctx
        };
        let problems = generate_problems(&scene, ctx.robot, grid.problems, base.seed)?;
        for &seed in &grid.seeds {
            let planner = PlannerParams {
                nodes,
                ..base.planner
            };
            let strategy = MultiObjectStrategy {
                sampler: base.sampler,
            };
            let roadmap = build_roadmap(&sub, &strategy, &base.steering, &planner, seed)?;
            let outcomes = solve_problems(
                &roadmap,
                &sub,
                &strategy,
                &problems,
                planner.alpha,
                &base.eval,
            );
            let timing = |t: f64| if base.record_timing { t } else { 0.0 };
            rows.push(SweepRow {
                series: series.to_string(),
                nodes,
                objects,
                seed,
                build_time_s: timing(roadmap.metadata.build_time_s),
                plan_time_s: timing(
                    mean(
                        outcomes
                            .iter()
                            .filter_map(|o| o.path.as_ref())
                            .map(|p| p.plan_time_s),
                    )
                    .unwrap_or(0.0),
                ),
                avg_detected_objects: mean(
                    outcomes
                        .iter()
                        .filter_map(|o| o.metrics)
                        .map(|m| m.avg_detected_objects),
                )
                .unwrap_or(0.0),
                solved: outcomes.iter().filter(|o| o.metrics.is_some()).count(),
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Cost backend used when no trained model is supplied.
pub fn default_cost_model() -> CostModel {
    CostModel::Oracle(Default::default())
}
