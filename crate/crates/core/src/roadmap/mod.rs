//! Roadmap construction, composite edge costs, normalization and query attachment.

mod knn;

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use knn::KdTree;

use crate::error::{Error, Result};
use crate::geometry::{config_in_collision, Configuration, RobotModel, DOF};
use crate::perception::{aggregate_cost, CostModel};
use crate::sampling::{perception_aware_sample, SamplerParams};
use crate::scenegraph::SceneGraph;
use crate::steering::{discretize, motion_collision_free, LocalMotion, SteeringParams};

pub const ROADMAP_FORMAT: u32 = 1;

/// Scene, robot and cost backend shared by construction and queries.
#[derive(Clone, Copy)]
pub struct PlanningContext<'a> {
    pub scene: &'a SceneGraph,
    pub robot: &'a RobotModel,
    pub model: &'a CostModel,
}

/// Node sampler and pointwise perception cost of one planning method.
pub trait NodeStrategy: Sync {
    /// Method label written to roadmap and metrics files.
    fn name(&self) -> &'static str;

    fn sample(&self, ctx: &PlanningContext, rng: &mut ChaCha8Rng) -> Result<Configuration>;

    /// Perception cost at a single configuration, integrated along edges.
    fn point_cost(&self, ctx: &PlanningContext, q: &Configuration) -> Result<f64>;
}

/// Multi-object sampler with the weighted aggregate perception cost.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MultiObjectStrategy {
    pub sampler: SamplerParams,
}

impl NodeStrategy for MultiObjectStrategy {
    fn name(&self) -> &'static str {
        "multi_object"
    }

    fn sample(&self, ctx: &PlanningContext, rng: &mut ChaCha8Rng) -> Result<Configuration> {
        perception_aware_sample(ctx.scene, ctx.robot, ctx.model, &self.sampler, rng)
    }

    fn point_cost(&self, ctx: &PlanningContext, q: &Configuration) -> Result<f64> {
        aggregate_cost(q, ctx.scene, ctx.robot, ctx.model)
    }
}

/// Independent random stream for node `index`, regardless of thread count.
pub fn node_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    /// Node budget.
    pub nodes: usize,
    /// Neighbors connected per new node.
    pub neighbors: usize,
    /// Weight of the perception cost against the motion cost.
    pub alpha: f64,
    /// Quadrature intervals per edge.
    pub discretization: usize,
    /// Wall-clock sampling budget in seconds; replaces the node budget when set.
    pub time_limit: Option<f64>,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            nodes: 300,
            neighbors: 5,
            alpha: 1.0,
            discretization: 10,
            time_limit: None,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::param("nodes", "must be at least 1"));
        }
        if self.neighbors == 0 {
            return Err(Error::param("neighbors", "must be at least 1"));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::param("alpha", "must be finite and nonnegative"));
        }
        if self.discretization < 2 {
            return Err(Error::param("discretization", "must be at least 2"));
        }
        if let Some(t) = self.time_limit {
            if !(t > 0.0) {
                return Err(Error::param("time_limit", "must be positive"));
            }
        }
        Ok(())
    }
}

/// A stored edge. Undirected roadmaps use one record for both directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub motion_cost: f64,
    pub perception_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeCost {
    pub motion: f64,
    pub perception: f64,
    pub combined: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostRange {
    pub min: f64,
    pub max: f64,
}

impl CostRange {
    pub const EMPTY: CostRange = CostRange {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };

    pub fn include(&mut self, v: f64) {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    /// Maps `[min, max]` onto `[0, 1]`; a degenerate range maps to 0.
    pub fn normalize(&self, v: f64) -> f64 {
        let span = self.max - self.min;
        if span > 0.0 {
            ((v - self.min) / span).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

/// Per-channel cost ranges over a set of edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBounds {
    pub motion: CostRange,
    pub perception: CostRange,
}

impl CostBounds {
    pub const EMPTY: CostBounds = CostBounds {
        motion: CostRange::EMPTY,
        perception: CostRange::EMPTY,
    };

    pub fn over<'a>(edges: impl IntoIterator<Item = &'a Edge>) -> Self {
        let mut b = Self::EMPTY;
        for e in edges {
            b.include(e);
        }
        b
    }

    pub fn include(&mut self, e: &Edge) {
        self.motion.include(e.motion_cost);
        self.perception.include(e.perception_cost);
    }

    pub fn is_empty(&self) -> bool {
        self.motion.min > self.motion.max
    }

    /// Normalized `(motion, perception)` of an edge.
    pub fn normalized(&self, e: &Edge) -> (f64, f64) {
        (
            self.motion.normalize(e.motion_cost),
            self.perception.normalize(e.perception_cost),
        )
    }

    pub fn combined(&self, e: &Edge, alpha: f64) -> f64 {
        let (m, p) = self.normalized(e);
        m + alpha * p
    }
}

/// Counters of the shared machinery invoked during a build.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub samples: usize,
    pub neighbor_queries: usize,
    pub steering_calls: usize,
    pub collision_checks: usize,
    pub rejected_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildMetadata {
    pub method: String,
    pub seed: u64,
    pub params: PlannerParams,
    pub steering: SteeringParams,
    pub build_time_s: f64,
    pub stats: BuildStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Roadmap {
    pub nodes: Vec<Configuration>,
    pub edges: Vec<Edge>,
    /// Whether each edge is traversable only from `from` to `to`.
    pub directed: bool,
    pub bounds: CostBounds,
    pub metadata: BuildMetadata,
}

/// Left Riemann sum of a pointwise cost at `t_k = k / K`, `k = 0..K-1`.
pub fn integrate_along(
    motion: &LocalMotion,
    intervals: usize,
    mut cost: impl FnMut(&Configuration) -> Result<f64>,
) -> Result<f64> {
    let samples = discretize(motion, intervals)?;
    let mut sum = 0.0;
    for (_, q) in &samples[..intervals] {
        sum += cost(q)?;
    }
    Ok(sum / intervals as f64)
}

/// Perception cost of an edge under the weighted aggregate cost.
pub fn edge_perception_cost(
    motion: &LocalMotion,
    ctx: &PlanningContext,
    intervals: usize,
) -> Result<f64> {
    integrate_along(motion, intervals, |q| {
        aggregate_cost(q, ctx.scene, ctx.robot, ctx.model)
    })
}

/// Raw motion cost, perception cost and their `alpha`-weighted sum.
pub fn edge_cost(
    motion: &LocalMotion,
    ctx: &PlanningContext,
    alpha: f64,
    intervals: usize,
) -> Result<EdgeCost> {
    let perception = edge_perception_cost(motion, ctx, intervals)?;
    Ok(EdgeCost {
        motion: motion.length,
        perception,
        combined: motion.length + alpha * perception,
    })
}

/// Steers, collision-checks and prices a directed connection; `None` when blocked.
fn connect(
    ctx: &PlanningContext,
    strategy: &dyn NodeStrategy,
    steering: &SteeringParams,
    intervals: usize,
    (from, to): (usize, usize),
    (a, b): (&Configuration, &Configuration),
) -> Result<Option<Edge>> {
    let motion = steering.steer(a, b, &ctx.robot.metric);
    if !motion_collision_free(
        &motion,
        &ctx.scene.obstacles,
        ctx.robot,
        steering.collision_resolution,
    ) {
        return Ok(None);
    }
    let perception_cost = integrate_along(&motion, intervals, |q| strategy.point_cost(ctx, q))?;
    Ok(Some(Edge {
        from,
        to,
        motion_cost: motion.length,
        perception_cost,
    }))
}

/// Directed connections attempted for a pair: one for symmetric steering, both otherwise.
fn directions(steering: &SteeringParams, u: usize, v: usize) -> Vec<(usize, usize)> {
    if steering.kind.is_directed() {
        vec![(u, v), (v, u)]
    } else {
        vec![(u, v)]
    }
}

fn sample_nodes(
    ctx: &PlanningContext,
    strategy: &dyn NodeStrategy,
    params: &PlannerParams,
    seed: u64,
    started: Instant,
) -> Result<Vec<Configuration>> {
    let draw = |i: usize| strategy.sample(ctx, &mut node_rng(seed, i as u64));
    match params.time_limit {
        None => (0..params.nodes).into_par_iter().map(draw).collect(),
        Some(limit) => {
            let chunk = 4 * rayon::current_num_threads();
            let mut nodes = Vec::new();
            while started.elapsed().as_secs_f64() < limit {
                let base = nodes.len();
                let batch: Vec<_> = (base..base + chunk)
                    .into_par_iter()
                    .map(draw)
                    .collect::<Result<_>>()?;
                nodes.extend(batch);
            }
            Ok(nodes)
        }
    }
}

/// Builds a roadmap: samples nodes with `strategy`, connects each new node to
/// its nearest predecessors and stores both cost channels of every
/// collision-free edge.
///
/// Node `i` draws from its own random stream, and edges are merged in node
/// order, so the result does not depend on the number of worker threads.
pub fn build_roadmap(
    ctx: &PlanningContext,
    strategy: &dyn NodeStrategy,
    steering: &SteeringParams,
    params: &PlannerParams,
    seed: u64,
) -> Result<Roadmap> {
    params.validate()?;
    steering.validate()?;
    ctx.robot.validate()?;
    let started = Instant::now();
    let nodes = sample_nodes(ctx, strategy, params, seed, started)?;

    let mut tree = KdTree::new(ctx.robot.metric);
    let mut pairs = Vec::new();
    for (i, q) in nodes.iter().enumerate() {
        for (j, _) in tree.nearest(q, params.neighbors) {
            pairs.push((j, i));
        }
        tree.insert(*q);
    }
    let attempts: Vec<(usize, usize)> = pairs
        .iter()
        .flat_map(|&(j, i)| directions(steering, j, i))
        .collect();
    let results: Vec<Option<Edge>> = attempts
        .par_iter()
        .map(|&(u, v)| {
            connect(
                ctx,
                strategy,
                steering,
                params.discretization,
                (u, v),
                (&nodes[u], &nodes[v]),
            )
        })
        .collect::<Result<_>>()?;
    let rejected = results.iter().filter(|e| e.is_none()).count();
    let edges: Vec<Edge> = results.into_iter().flatten().collect();
    let stats = BuildStats {
        samples: nodes.len(),
        neighbor_queries: nodes.len(),
        steering_calls: attempts.len(),
        collision_checks: attempts.len(),
        rejected_edges: rejected,
    };
    log::debug!(
        "{}: {} nodes, {} edges, {} rejected",
        strategy.name(),
        nodes.len(),
        edges.len(),
        rejected
    );
    Ok(Roadmap {
        bounds: CostBounds::over(&edges),
        directed: steering.kind.is_directed(),
        nodes,
        edges,
        metadata: BuildMetadata {
            method: strategy.name().to_string(),
            seed,
            params: *params,
            steering: *steering,
            build_time_s: started.elapsed().as_secs_f64(),
            stats,
        },
    })
}

/// Goal of a query: a configuration connected like a node, or a ball of roadmap nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalSpec {
    Configuration(Configuration),
    Region { center: Configuration, radius: f64 },
}

/// A roadmap augmented with query nodes; the roadmap itself is not modified.
///
/// Indices below `roadmap.nodes.len()` are roadmap nodes; the start follows,
/// then the goal configuration if one was given.
#[derive(Debug, Clone)]
pub struct QueryGraph<'a> {
    pub roadmap: &'a Roadmap,
    pub extra_nodes: Vec<Configuration>,
    pub extra_edges: Vec<Edge>,
    pub bounds: CostBounds,
    pub start: usize,
    pub goals: Vec<usize>,
}

impl<'a> QueryGraph<'a> {
    /// The roadmap alone, with no query nodes.
    pub fn bare(roadmap: &'a Roadmap) -> Self {
        Self {
            roadmap,
            extra_nodes: Vec::new(),
            extra_edges: Vec::new(),
            bounds: roadmap.bounds,
            start: 0,
            goals: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.roadmap.nodes.len() + self.extra_nodes.len()
    }

    pub fn node(&self, i: usize) -> &Configuration {
        let n = self.roadmap.nodes.len();
        if i < n {
            &self.roadmap.nodes[i]
        } else {
            &self.extra_nodes[i - n]
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.roadmap.edges.iter().chain(&self.extra_edges)
    }

    pub fn edge(&self, id: usize) -> &Edge {
        let n = self.roadmap.edges.len();
        if id < n {
            &self.roadmap.edges[id]
        } else {
            &self.extra_edges[id - n]
        }
    }

    /// Traversable arcs `(from, to, edge id)`; undirected edges yield both directions.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let directed = self.roadmap.directed;
        self.edges().enumerate().flat_map(move |(id, e)| {
            let back = (!directed).then_some((e.to, e.from, id));
            std::iter::once((e.from, e.to, id)).chain(back)
        })
    }

    /// Combined normalized cost of an edge.
    pub fn cost(&self, id: usize, alpha: f64) -> f64 {
        self.bounds.combined(self.edge(id), alpha)
    }
}

/// Connects a query configuration to its nearest roadmap nodes.
fn attach_one(
    roadmap: &Roadmap,
    tree: &KdTree,
    ctx: &PlanningContext,
    strategy: &dyn NodeStrategy,
    index: usize,
    q: &Configuration,
    outgoing: bool,
) -> Result<Vec<Edge>> {
    let steering = &roadmap.metadata.steering;
    let k = roadmap.metadata.params.neighbors;
    let intervals = roadmap.metadata.params.discretization;
    let mut edges = Vec::new();
    for (j, _) in tree.nearest(q, k) {
        let (from, to) = if outgoing { (index, j) } else { (j, index) };
        let (a, b) = if outgoing {
            (q, &roadmap.nodes[j])
        } else {
            (&roadmap.nodes[j], q)
        };
        if let Some(e) = connect(ctx, strategy, steering, intervals, (from, to), (a, b))? {
            edges.push(e);
        }
    }
    Ok(edges)
}

/// Adds the start (and goal configuration) to a view of the roadmap and
/// recomputes the normalization bounds over all edges of the view.
pub fn attach_query<'a>(
    roadmap: &'a Roadmap,
    ctx: &PlanningContext,
    strategy: &dyn NodeStrategy,
    start: &Configuration,
    goal: &GoalSpec,
) -> Result<QueryGraph<'a>> {
    if !start.is_finite() || config_in_collision(start, &ctx.scene.obstacles, ctx.robot) {
        return Err(Error::InvalidConfiguration("start is in collision".into()));
    }
    ctx.robot.check_limits(start)?;
    if roadmap.nodes.is_empty() {
        return Err(Error::EmptyInput("roadmap has no nodes"));
    }
    let tree = KdTree::from_points(ctx.robot.metric, &roadmap.nodes);
    let n = roadmap.nodes.len();
    let start_edges = attach_one(roadmap, &tree, ctx, strategy, n, start, true)?;
    if start_edges.is_empty() {
        return Err(Error::NoPath {
            expanded: 0,
            reason: "start has no collision-free connection to the roadmap".into(),
        });
    }
    let mut view = QueryGraph {
        roadmap,
        extra_nodes: vec![*start],
        extra_edges: start_edges,
        bounds: roadmap.bounds,
        start: n,
        goals: Vec::new(),
    };
    match goal {
        GoalSpec::Configuration(g) => {
            if !g.is_finite() || config_in_collision(g, &ctx.scene.obstacles, ctx.robot) {
                return Err(Error::InvalidConfiguration("goal is in collision".into()));
            }
            let goal_edges = attach_one(roadmap, &tree, ctx, strategy, n + 1, g, false)?;
            if goal_edges.is_empty() {
                return Err(Error::NoPath {
                    expanded: 0,
                    reason: "goal has no collision-free connection to the roadmap".into(),
                });
            }
            view.extra_nodes.push(*g);
            view.extra_edges.extend(goal_edges);
            view.goals.push(n + 1);
        }
        GoalSpec::Region { center, radius } => {
            view.goals = (0..n)
                .filter(|&i| ctx.robot.metric.distance(&roadmap.nodes[i], center) <= *radius)
                .collect();
            if view.goals.is_empty() {
                return Err(Error::NoPath {
                    expanded: 0,
                    reason: "goal region contains no roadmap node".into(),
                });
            }
        }
    }
    for e in &view.extra_edges {
        view.bounds.include(e);
    }
    Ok(view)
}

#[derive(Serialize, Deserialize)]
struct RoadmapFile {
    format: u32,
    directed: bool,
    metadata: BuildMetadata,
    nodes: Vec<[f64; DOF]>,
    edges: Vec<(usize, usize, f64, f64)>,
}

impl Roadmap {
    fn to_file(&self) -> RoadmapFile {
        RoadmapFile {
            format: ROADMAP_FORMAT,
            directed: self.directed,
            metadata: self.metadata.clone(),
            nodes: self.nodes.iter().map(Configuration::to_array).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| (e.from, e.to, e.motion_cost, e.perception_cost))
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: RoadmapFile = serde_json::from_str(text)?;
        if file.format != ROADMAP_FORMAT {
            return Err(Error::Format(format!(
                "roadmap format {} (expected {ROADMAP_FORMAT})",
                file.format
            )));
        }
        let nodes: Vec<Configuration> = file
            .nodes
            .iter()
            .map(|a| Configuration::from_array(*a))
            .collect();
        if nodes.iter().any(|q| !q.is_finite()) {
            return Err(Error::Format("non-finite node coordinate".into()));
        }
        let mut edges = Vec::with_capacity(file.edges.len());
        for &(from, to, motion_cost, perception_cost) in &file.edges {
            if from >= nodes.len() || to >= nodes.len() || from == to {
                return Err(Error::Format(format!(
                    "edge ({from}, {to}) has invalid endpoints"
                )));
            }
            if !(motion_cost >= 0.0 && perception_cost >= 0.0) {
                return Err(Error::Format(format!(
                    "edge ({from}, {to}) has invalid costs"
                )));
            }
            edges.push(Edge {
                from,
                to,
                motion_cost,
                perception_cost,
            });
        }
        Ok(Self {
            bounds: CostBounds::over(&edges),
            directed: file.directed,
            nodes,
            edges,
            metadata: file.metadata,
        })
    }

    /// SHA-256 of the node and edge tables, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update([self.directed as u8]);
        for q in &self.nodes {
            for v in q.to_array() {
                h.update(v.to_le_bytes());
            }
        }
        for e in &self.edges {
            h.update((e.from as u64).to_le_bytes());
            h.update((e.to as u64).to_le_bytes());
            h.update(e.motion_cost.to_le_bytes());
            h.update(e.perception_cost.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn save_roadmap(roadmap: &Roadmap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, roadmap.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_roadmap(path: impl AsRef<Path>) -> Result<Roadmap> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Roadmap::from_json(&text)
}
