use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use perception_prm::bench::{
    evaluate_path, frame_configurations, record_frames, run_benchmark, run_scaling_sweep,
    write_metrics_csv, write_metrics_json, write_sweep_csv, EvalParams, Method, ScenarioSpec,
    SweepGrid,
};
use perception_prm::geometry::{Configuration, RobotModel};
use perception_prm::perception::{
    generate_dataset, read_dataset, train_costmap, CostModel, CostmapModel, OracleParams,
    TrainConfig,
};
use perception_prm::roadmap::{
    build_roadmap, load_roadmap, save_roadmap, GoalSpec, PlannerParams, PlanningContext,
};
use perception_prm::sampling::SamplerParams;
use perception_prm::scenegraph::{load_scene, SceneGraph};
use perception_prm::search::{plan, PathFile, PlanParams};
use perception_prm::steering::{SteeringKind, SteeringParams};
use perception_prm::{Error, Result};

#[derive(Parser)]
#[command(name = "pprm", version, about = "Perception-aware roadmap planning")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Record wall-clock times in outputs instead of writing 0.
    #[arg(long, global = true)]
    timing: bool,
    /// Robot model JSON (default: the built-in robot).
    #[arg(long, global = true)]
    robot: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ModelArg {
    /// Trained costmap JSON; the detector oracle is used when omitted.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct RoadmapArgs {
    #[arg(long, default_value_t = 300)]
    nodes: usize,
    #[arg(long, default_value_t = 5)]
    neighbors: usize,
    #[arg(long, default_value_t = 10)]
    discretization: usize,
    #[arg(long, value_enum, default_value_t = Steering::StraightLine)]
    steering: Steering,
    #[arg(long, default_value_t = 0.5)]
    turning_radius: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Steering {
    StraightLine,
    ReedsShepp,
}

#[derive(Subcommand)]
enum Command {
    /// Sample labeled camera views of the scene's monitored objects.
    GenDataset {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
    },
    /// Fit the neural costmap to a dataset.
    TrainCostmap {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 60)]
        epochs: usize,
        /// Hidden layer widths, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "64,64,64")]
        hidden: Vec<usize>,
    },
    /// Build a roadmap and write it to a file.
    BuildPrm {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        roadmap: RoadmapArgs,
        #[arg(long, default_value = "multi_object")]
        method: String,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    /// Query a roadmap and write the path file.
    Plan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        roadmap: PathBuf,
        /// x,y,theta,pan,tilt
        #[arg(long, value_parser = parse_config, allow_hyphen_values = true)]
        start: Configuration,
        /// x,y,theta,pan,tilt
        #[arg(long, value_parser = parse_config, allow_hyphen_values = true)]
        goal: Configuration,
        /// Accept any roadmap node within this configuration distance of the goal.
        #[arg(long)]
        goal_radius: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    /// Score a path file with the detector and tracker.
    EvalPath {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        path: PathBuf,
        #[arg(long, default_value_t = 50)]
        frames: usize,
    },
    /// Compare the planner with the baselines on seeded problems.
    Benchmark {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        roadmap: RoadmapArgs,
        #[arg(long, default_value_t = 20)]
        problems: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Methods to run, comma separated (default: all).
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        /// Scenario label (default: the scene name).
        #[arg(long)]
        name: Option<String>,
    },
    /// Build and plan times and detections over roadmap sizes and object counts.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',', default_value = "50,150,300")]
        node_counts: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "2,5,8")]
        object_counts: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        fixed_objects: usize,
        #[arg(long, default_value_t = 300)]
        fixed_nodes: usize,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value_t = 5)]
        problems: usize,
    },
}

fn parse_config(s: &str) -> std::result::Result<Configuration, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [x, y, theta, pan, tilt] => Ok(Configuration::new(x, y, theta, pan, tilt)),
        _ => Err(format!(
            "expected 5 comma-separated values, got {}",
            v.len()
        )),
    }
}

fn load_robot(path: Option<&Path>) -> Result<RobotModel> {
    let robot = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.into(),
                source: e,
            })?;
            serde_json::from_str(&text)?
        }
        None => RobotModel::default(),
    };
    robot.validate()?;
    Ok(robot)
}

fn load_model(arg: &ModelArg) -> Result<CostModel> {
    Ok(match &arg.model {
        Some(p) => CostModel::Network(CostmapModel::load(p)?),
        None => CostModel::Oracle(OracleParams::default()),
    })
}

impl RoadmapArgs {
    fn planner(&self, alpha: f64) -> PlannerParams {
        PlannerParams {
            nodes: self.nodes,
            neighbors: self.neighbors,
            alpha,
            discretization: self.discretization,
            ..PlannerParams::default()
        }
    }

    fn steering(&self) -> SteeringParams {
        SteeringParams {
            kind: match self.steering {
                Steering::StraightLine => SteeringKind::StraightLine,
                Steering::ReedsShepp => SteeringKind::ReedsShepp,
            },
            turning_radius: self.turning_radius,
            ..SteeringParams::default()
        }
    }
}

fn write_json(value: &impl serde::Serialize, path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<String> {
    let robot = load_robot(cli.robot.as_deref())?;
    let scene_of = |c: &Common| -> Result<SceneGraph> { load_scene(&c.scene) };
    let timing = cli.timing;
    match cli.command {
        Command::GenDataset { common, count } => {
            let scene = scene_of(&common)?;
            let samples =
                generate_dataset(&scene, &robot, &OracleParams::default(), count, common.seed)?;
            perception_prm::perception::write_dataset(&samples, &common.out)?;
            let ones = samples.iter().filter(|s| s.label == 1.0).count();
            Ok(format!(
                "gen-dataset: {} samples ({} missed) -> {}",
                samples.len(),
                ones,
                common.out.display()
            ))
        }
        Command::TrainCostmap {
            common,
            dataset,
            epochs,
            hidden,
        } => {
            let scene = scene_of(&common)?;
            let samples = read_dataset(&dataset)?;
            let config = TrainConfig {
                epochs,
                hidden_sizes: hidden,
                seed: common.seed,
                ..TrainConfig::default()
            };
            let (model, report) = train_costmap(&samples, &scene, &config)?;
            model.save(&common.out)?;
            Ok(format!(
                "train-costmap: {} samples, held-out mse {:.6} -> {}",
                samples.len(),
                report.final_heldout_mse(),
                common.out.display()
            ))
        }
        Command::BuildPrm {
            common,
            model,
            roadmap,
            method,
            alpha,
        } => {
            let scene = scene_of(&common)?;
            let model = load_model(&model)?;
            let ctx = PlanningContext {
                scene: &scene,
                robot: &robot,
                model: &model,
            };
            let strategy = Method::from_name(&method)?.strategy(&SamplerParams::default());
            let mut built = build_roadmap(
                &ctx,
                strategy.as_ref(),
                &roadmap.steering(),
                &roadmap.planner(alpha),
                common.seed,
            )?;
            if !timing {
                built.metadata.build_time_s = 0.0;
            }
            save_roadmap(&built, &common.out)?;
            Ok(format!(
                "build-prm: {} nodes, {} edges ({method}) -> {}",
                built.nodes.len(),
                built.edges.len(),
                common.out.display()
            ))
        }
        Command::Plan {
            common,
            model,
            roadmap,
            start,
            goal,
            goal_radius,
            alpha,
        } => {
            let scene = scene_of(&common)?;
            let model = load_model(&model)?;
            let roadmap = load_roadmap(&roadmap)?;
            let ctx = PlanningContext {
                scene: &scene,
                robot: &robot,
                model: &model,
            };
            let strategy =
                Method::from_name(&roadmap.metadata.method)?.strategy(&SamplerParams::default());
            let goal = match goal_radius {
                Some(radius) => GoalSpec::Region {
                    center: goal,
                    radius,
                },
                None => GoalSpec::Configuration(goal),
            };
            let params = PlanParams {
                alpha,
                ..PlanParams::default()
            };
            let mut path = plan(&roadmap, &ctx, strategy.as_ref(), &start, &goal, &params)?;
            if !timing {
                path.plan_time_s = 0.0;
            }
            let summary = format!(
                "plan: {} edges, motion {:.4}, perception {:.4}, combined {:.6} -> {}",
                path.edges.len(),
                path.motion_cost,
                path.perception_cost,
                path.combined_cost,
                common.out.display()
            );
            PathFile::new(path, &roadmap, alpha).save(&common.out)?;
            Ok(summary)
        }
        Command::EvalPath {
            common,
            path,
            frames,
        } => {
            let scene = scene_of(&common)?;
            let file = PathFile::load(&path)?;
            let params = EvalParams {
                frames,
                ..EvalParams::default()
            };
            let metrics = evaluate_path(&file.path, &scene, &robot, &params)?;
            let configs = frame_configurations(&file.path, &robot, params.frames);
            let records = record_frames(&configs, &scene, &robot, &params)?;
            write_json(
                &serde_json::json!({ "metrics": metrics, "frames": records }),
                &common.out,
            )?;
            Ok(format!(
                "eval-path: detected {:.3}, track {:.3}, confidence {:.3}, length {:.3} -> {}",
                metrics.avg_detected_objects,
                metrics.track_rate,
                metrics.avg_confidence,
                metrics.path_length,
                common.out.display()
            ))
        }
        Command::Benchmark {
            common,
            model,
            roadmap,
            problems,
            alpha,
            methods,
            name,
        } => {
            let scene = scene_of(&common)?;
            let model = load_model(&model)?;
            let ctx = PlanningContext {
                scene: &scene,
                robot: &robot,
                model: &model,
            };
            let mut spec = ScenarioSpec::new(
                name.or_else(|| scene.name.clone())
                    .unwrap_or_else(|| "scene".into()),
                problems,
                common.seed,
            );
            if !methods.is_empty() {
                spec.methods = methods
                    .iter()
                    .map(|m| Method::from_name(m))
                    .collect::<Result<_>>()?;
            }
            spec.planner = roadmap.planner(alpha);
            spec.steering = roadmap.steering();
            spec.record_timing = timing;
            let rows = run_benchmark(&ctx, &spec)?;
            write_metrics_csv(&rows, &common.out)?;
            let mirror = common.out.with_extension("json");
            write_metrics_json(&rows, &mirror)?;
            let best = rows
                .iter()
                .filter(|r| r.problem_index.is_none())
                .map(|r| format!("{} {:.3}", r.method, r.avg_detected_objects.unwrap_or(0.0)))
                .collect::<Vec<_>>()
                .join(", ");
            Ok(format!(
                "benchmark: {} rows; detected objects: {best} -> {}",
                rows.len(),
                common.out.display()
            ))
        }
        Command::Sweep {
            common,
            model,
            node_counts,
            object_counts,
            fixed_objects,
            fixed_nodes,
            seeds,
            problems,
        } => {
            let scene = scene_of(&common)?;
            let model = load_model(&model)?;
            let ctx = PlanningContext {
                scene: &scene,
                robot: &robot,
                model: &model,
            };
            let grid = SweepGrid {
                node_counts,
                object_counts,
                fixed_objects,
                fixed_nodes,
                seeds: (common.seed..common.seed + seeds).collect(),
                problems,
            };
            let mut base = ScenarioSpec::new(
                scene.name.clone().unwrap_or_else(|| "scene".into()),
                problems,
                common.seed,
            );
            base.record_timing = timing;
            let rows = run_scaling_sweep(&ctx, &grid, &base)?;
            write_sweep_csv(&rows, &common.out)?;
            Ok(format!(
                "sweep: {} rows -> {}",
                rows.len(),
                common.out.display()
            ))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("pprm: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("pprm: {e}");
            ExitCode::from(1)
        }
    }
}
