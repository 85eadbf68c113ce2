//! Detector oracle, training data, the neural costmap and aggregate perception cost.

mod costmap;
mod dataset;
pub mod mlp;
mod oracle;
mod train;

pub use costmap::{
    aggregate_cost, batch_cost, perception_cost_of, CostModel, CostmapModel, FeatureEncoder,
    MODEL_FORMAT, POSE_FEATURES,
};
pub use dataset::{
    generate_dataset, read_dataset, write_dataset, PerceptionSample, MIN_VIEW_DISTANCE,
};
pub use oracle::{label_of, oracle_score, OracleParams};
pub use train::{
    evaluate_model, spearman, train_costmap, EpochStats, Fidelity, TrainConfig, TrainingReport,
};
