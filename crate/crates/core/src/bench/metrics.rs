use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{forward_kinematics, Configuration, RobotModel};
use crate::perception::{oracle_score, OracleParams};
use crate::scenegraph::SceneGraph;
use crate::search::PathResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    pub frames: usize,
    /// Detector score at or above which an object counts as detected.
    pub detection_threshold: f64,
    /// Longest run of missed frames a track survives.
    pub gap_tolerance: usize,
    pub oracle: OracleParams,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            frames: 50,
            detection_threshold: 0.25,
            gap_tolerance: 3,
            oracle: OracleParams::default(),
        }
    }
}

impl EvalParams {
    pub fn validate(&self) -> Result<()> {
        if self.frames < 2 {
            return Err(Error::param("frames", "must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.detection_threshold) {
            return Err(Error::param("detection_threshold", "must lie in [0, 1]"));
        }
        self.oracle.validate()
    }
}

/// Detector output for one frame, in monitored-object order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub index: usize,
    pub configuration: Configuration,
    pub scores: Vec<f64>,
    pub detected: Vec<bool>,
}

/// Perception quality of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathMetrics {
    pub avg_detected_objects: f64,
    pub track_rate: f64,
    pub avg_confidence: f64,
    pub scaled_avg_confidence: f64,
    pub path_length: f64,
    /// Number of (frame, object) detections.
    pub detections: usize,
    /// Sum of detector scores over all detections.
    pub score_sum: f64,
    pub frames: usize,
}

/// Configurations at `frames` points equally spaced in motion length along the path.
pub fn frame_configurations(
    path: &PathResult,
    robot: &RobotModel,
    frames: usize,
) -> Vec<Configuration> {
    let metric = &robot.metric;
    let motions: Vec<_> = path
        .configurations
        .windows(2)
        .map(|w| path.steering.steer(&w[0], &w[1], metric))
        .collect();
    let total: f64 = motions.iter().map(|m| m.length).sum();
    let first = path.configurations[0];
    if motions.is_empty() || !(total > 0.0) {
        return vec![first; frames];
    }
    let mut out = Vec::with_capacity(frames);
    let mut edge = 0;
    let mut before = 0.0;
    for j in 0..frames {
        let s = total * j as f64 / (frames - 1) as f64;
        while edge + 1 < motions.len() && before + motions[edge].length < s {
            before += motions[edge].length;
            edge += 1;
        }
        let m = &motions[edge];
        let t = if m.length > 0.0 {
            ((s - before) / m.length).clamp(0.0, 1.0)
        } else {
            1.0
        };
        out.push(if j + 1 == frames { m.end } else { m.sample(t) });
    }
    out
}

/// Runs the detector oracle on each configuration.
pub fn record_frames(
    configs: &[Configuration],
    scene: &SceneGraph,
    robot: &RobotModel,
    params: &EvalParams,
) -> Result<Vec<FrameRecord>> {
    configs
        .iter()
        .enumerate()
        .map(|(index, q)| {
            let cam = forward_kinematics(q, robot)?;
            let scores: Vec<f64> = scene
                .monitored()
                .map(|o| oracle_score(&cam, o, &scene.obstacles, &params.oracle, robot))
                .collect();
            let detected = scores
                .iter()
                .map(|s| *s > 0.0 && *s >= params.detection_threshold)
                .collect();
            Ok(FrameRecord {
                index,
                configuration: *q,
                scores,
                detected,
            })
        })
        .collect()
}

/// Fraction of all frames on which a bounded-gap track of the object is alive.
///
/// The track starts at the first detection. It stays alive through a run of
/// missed frames as long as the run is at most `gap_tolerance` long, and dies
/// for good once a run exceeds it (a later detection starts a new track).
pub fn tracked_fraction(detected: &[bool], gap_tolerance: usize) -> f64 {
    if detected.is_empty() {
        return 0.0;
    }
    let mut alive_frames = 0;
    let mut alive = false;
    let mut gap = 0;
    for &d in detected {
        if d {
            alive = true;
            gap = 0;
        } else if alive {
            gap += 1;
            if gap > gap_tolerance {
                alive = false;
            }
        }
        if alive {
            alive_frames += 1;
        }
    }
    alive_frames as f64 / detected.len() as f64
}

/// Detection and tracking metrics from recorded frames.
pub fn summarize_frames(
    frames: &[FrameRecord],
    scene: &SceneGraph,
    gap_tolerance: usize,
    path_length: f64,
) -> PathMetrics {
    let n = frames.len().max(1) as f64;
    let mut detections = 0;
    let mut score_sum = 0.0;
    for f in frames {
        for (s, d) in f.scores.iter().zip(&f.detected) {
            if *d {
                detections += 1;
                score_sum += s;
            }
        }
    }
    let weights: Vec<f64> = scene.monitored().map(|o| o.weight).collect();
    let total_weight: f64 = weights.iter().sum();
    let track_rate = if total_weight > 0.0 {
        weights
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let seq: Vec<bool> = frames.iter().map(|f| f.detected[k]).collect();
                w * tracked_fraction(&seq, gap_tolerance)
            })
            .sum::<f64>()
            / total_weight
    } else {
        0.0
    };
    let avg_detected_objects = detections as f64 / n;
    let avg_confidence = if detections > 0 {
        score_sum / detections as f64
    } else {
        0.0
    };
    PathMetrics {
        avg_detected_objects,
        track_rate,
        avg_confidence,
        scaled_avg_confidence: avg_detected_objects * avg_confidence,
        path_length,
        detections,
        score_sum,
        frames: frames.len(),
    }
}

/// Samples frames along the path and scores them with the detector oracle.
pub fn evaluate_path(
    path: &PathResult,
    scene: &SceneGraph,
    robot: &RobotModel,
    params: &EvalParams,
) -> Result<PathMetrics> {
    params.validate()?;
    let configs = frame_configurations(path, robot, params.frames);
    let frames = record_frames(&configs, scene, robot, params)?;
    Ok(summarize_frames(
        &frames,
        scene,
        params.gap_tolerance,
        path.base_length(),
    ))
}
