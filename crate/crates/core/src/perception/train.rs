use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::costmap::{CostmapModel, FeatureEncoder, POSE_FEATURES};
use super::dataset::PerceptionSample;
use super::mlp::{Mlp, RmsProp};
use crate::error::{Error, Result};
use crate::scenegraph::SceneGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Initial step size; decays linearly to 1% of this over the run.
    pub learning_rate: f64,
    pub hidden_sizes: Vec<usize>,
    pub seed: u64,
    pub holdout_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 60,
            batch_size: 64,
            learning_rate: 1e-3,
            hidden_sizes: vec![64, 64, 64],
            seed: 0,
            holdout_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    /// Five hidden layers of 256 units.
    pub fn large() -> Self {
        Self {
            hidden_sizes: vec![256; 5],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::param("batch_size", "must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::param("learning_rate", "must be positive"));
        }
        if self.hidden_sizes.iter().any(|h| *h == 0) {
            return Err(Error::param("hidden_sizes", "layers must be nonempty"));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::param("holdout_fraction", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub heldout_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// Entry 0 is the untrained network.
    pub epochs: Vec<EpochStats>,
    /// Indices into the input dataset that were held out.
    pub heldout: Vec<usize>,
}

impl TrainingReport {
    pub fn final_heldout_mse(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.heldout_mse)
    }
}

fn featurize(
    samples: &[PerceptionSample],
    scene: &SceneGraph,
) -> Result<(Vec<[f64; POSE_FEATURES]>, Vec<usize>)> {
    let mut poses = Vec::with_capacity(samples.len());
    let mut classes = Vec::with_capacity(samples.len());
    for s in samples {
        let obj = scene
            .object(&s.object_id)
            .ok_or_else(|| Error::UnknownObject(s.object_id.clone()))?;
        let class = scene
            .class_vocabulary
            .iter()
            .position(|c| *c == obj.class_name)
            .ok_or_else(|| Error::UnknownClass(obj.class_name.clone()))?;
        poses.push(FeatureEncoder::raw_pose(&s.camera, obj));
        classes.push(class);
    }
    Ok((poses, classes))
}

fn mse(net: &Mlp, xs: &[Vec<f64>], ys: &[f64], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    idx.iter()
        .map(|&i| (net.predict(&xs[i]) - ys[i]).powi(2))
        .sum::<f64>()
        / idx.len() as f64
}

/// Fits a costmap to oracle labels with mini-batch RMSProp.
pub fn train_costmap(
    samples: &[PerceptionSample],
    scene: &SceneGraph,
    config: &TrainConfig,
) -> Result<(CostmapModel, TrainingReport)> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyInput("training dataset is empty"));
    }
    let (poses, classes) = featurize(samples, scene)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng);
    let n_hold = ((samples.len() as f64) * config.holdout_fraction).round() as usize;
    let n_hold = n_hold.min(samples.len() - 1);
    let mut heldout = order[..n_hold].to_vec();
    heldout.sort_unstable();
    let mut train: Vec<usize> = order[n_hold..].to_vec();
    train.sort_unstable();

    let train_poses: Vec<_> = train.iter().map(|&i| poses[i]).collect();
    let encoder = FeatureEncoder::fit(scene.class_vocabulary.clone(), &train_poses);
    let xs: Vec<Vec<f64>> = poses
        .iter()
        .zip(&classes)
        .map(|(p, c)| encoder.encode_raw(p, *c))
        .collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.label).collect();

    let mut net = Mlp::new(encoder.dim(), &config.hidden_sizes, &mut rng);
    let mut opt = RmsProp::new(&net);
    let mut epochs = vec![EpochStats {
        epoch: 0,
        train_mse: mse(&net, &xs, &ys, &train),
        heldout_mse: mse(&net, &xs, &ys, &heldout),
    }];
    for epoch in 1..=config.epochs {
        let progress = (epoch - 1) as f64 / config.epochs.max(1) as f64;
        let lr = config.learning_rate * (1.0 - 0.99 * progress);
        train.shuffle(&mut rng);
        for batch in train.chunks(config.batch_size) {
            let (_, grads) = net.loss_and_grad(batch.iter().map(|&i| (xs[i].as_slice(), ys[i])));
            opt.step(&mut net, &grads, lr);
        }
        let stats = EpochStats {
            epoch,
            train_mse: mse(&net, &xs, &ys, &train),
            heldout_mse: mse(&net, &xs, &ys, &heldout),
        };
        log::debug!(
            "epoch {epoch}: train {:.5} held-out {:.5}",
            stats.train_mse,
            stats.heldout_mse
        );
        epochs.push(stats);
    }
    Ok((
        CostmapModel {
            encoder,
            network: net,
        },
        TrainingReport { epochs, heldout },
    ))
}

/// Agreement between a trained model and oracle labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fidelity {
    pub count: usize,
    pub mse: f64,
    pub spearman: f64,
    /// Fraction of inputs whose raw output already lies in `[0, 1]`.
    pub unclamped_fraction: f64,
    /// Fraction with absolute error at most 0.1.
    pub within_0_1: f64,
}

pub fn evaluate_model(
    model: &CostmapModel,
    samples: &[PerceptionSample],
    scene: &SceneGraph,
) -> Result<Fidelity> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("no samples to evaluate"));
    }
    let mut preds = Vec::with_capacity(samples.len());
    let mut unclamped = 0usize;
    for s in samples {
        let obj = scene
            .object(&s.object_id)
            .ok_or_else(|| Error::UnknownObject(s.object_id.clone()))?;
        let raw = model.raw_output(&s.camera, obj)?;
        if (0.0..=1.0).contains(&raw) {
            unclamped += 1;
        }
        preds.push(raw.clamp(0.0, 1.0));
    }
    let labels: Vec<f64> = samples.iter().map(|s| s.label).collect();
    let n = samples.len() as f64;
    let mse = preds
        .iter()
        .zip(&labels)
        .map(|(p, l)| (p - l).powi(2))
        .sum::<f64>()
        / n;
    let close = preds
        .iter()
        .zip(&labels)
        .filter(|(p, l)| (*p - *l).abs() <= 0.1)
        .count();
    Ok(Fidelity {
        count: samples.len(),
        mse,
        spearman: spearman(&preds, &labels),
        unclamped_fraction: unclamped as f64 / n,
        within_0_1: close as f64 / n,
    })
}

/// Ranks starting at 1, ties sharing their average rank.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.len() < 2 {
        return 0.0;
    }
    pearson(&average_ranks(a), &average_ranks(b))
}
