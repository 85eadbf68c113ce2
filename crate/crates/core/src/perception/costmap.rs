use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use super::oracle::{label_of, oracle_score, OracleParams};
use crate::error::{Error, Result};
use crate::geometry::{camera_pose, in_fov, CameraPose, Configuration, RobotModel};
use crate::scenegraph::{ObjectNode, SceneGraph};

pub const MODEL_FORMAT: u32 = 1;

/// Number of continuous features before the one-hot class block.
pub const POSE_FEATURES: usize = 6;

/// Camera-relative object pose plus one-hot class, with the pose part standardized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub classes: Vec<String>,
    pub mean: [f64; POSE_FEATURES],
    pub scale: [f64; POSE_FEATURES],
}

impl FeatureEncoder {
    pub fn identity(classes: Vec<String>) -> Self {
        Self {
            classes,
            mean: [0.0; POSE_FEATURES],
            scale: [1.0; POSE_FEATURES],
        }
    }

    pub fn dim(&self) -> usize {
        POSE_FEATURES + self.classes.len()
    }

    pub fn class_index(&self, class_name: &str) -> Result<usize> {
        self.classes
            .iter()
            .position(|c| c == class_name)
            .ok_or_else(|| Error::UnknownClass(class_name.to_string()))
    }

    /// Unstandardized pose features: centroid and face normal in the camera frame.
    pub fn raw_pose(cam: &CameraPose, obj: &ObjectNode) -> [f64; POSE_FEATURES] {
        let c = cam.to_camera_frame(&obj.centroid);
        let n = cam.rotate_to_camera(&obj.face_normal);
        [c.x, c.y, c.z, n.x, n.y, n.z]
    }

    pub fn encode(&self, cam: &CameraPose, obj: &ObjectNode) -> Result<Vec<f64>> {
        let class = self.class_index(&obj.class_name)?;
        Ok(self.encode_raw(&Self::raw_pose(cam, obj), class))
    }

    pub fn encode_raw(&self, pose: &[f64; POSE_FEATURES], class: usize) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        x.extend((0..POSE_FEATURES).map(|i| (pose[i] - self.mean[i]) / self.scale[i]));
        x.extend((0..self.classes.len()).map(|i| if i == class { 1.0 } else { 0.0 }));
        x
    }

    /// Fits the standardization to a set of raw pose vectors.
    pub fn fit(classes: Vec<String>, poses: &[[f64; POSE_FEATURES]]) -> Self {
        let mut enc = Self::identity(classes);
        if poses.is_empty() {
            return enc;
        }
        let n = poses.len() as f64;
        for i in 0..POSE_FEATURES {
            let mean = poses.iter().map(|p| p[i]).sum::<f64>() / n;
            let var = poses.iter().map(|p| (p[i] - mean).powi(2)).sum::<f64>() / n;
            enc.mean[i] = mean;
            enc.scale[i] = if var > 1e-12 { var.sqrt() } else { 1.0 };
        }
        enc
    }
}

/// Trained neural perception costmap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostmapModel {
    pub encoder: FeatureEncoder,
    pub network: Mlp,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: u32,
    #[serde(flatten)]
    model: CostmapModel,
}

impl CostmapModel {
    pub fn class_vocabulary(&self) -> &[String] {
        &self.encoder.classes
    }

    /// Network output before the final clamp.
    pub fn raw_output(&self, cam: &CameraPose, obj: &ObjectNode) -> Result<f64> {
        Ok(self.network.predict(&self.encoder.encode(cam, obj)?))
    }

    /// Predicted cost for an object in view, clamped to `[0, 1]`.
    pub fn predict(&self, cam: &CameraPose, obj: &ObjectNode) -> Result<f64> {
        Ok(self.raw_output(cam, obj)?.clamp(0.0, 1.0))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelFile {
            format: MODEL_FORMAT,
            model: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Format(format!(
                "model format {} (expected {MODEL_FORMAT})",
                file.format
            )));
        }
        let m = file.model;
        let mut n = m.encoder.dim();
        for (i, layer) in m.network.layers.iter().enumerate() {
            if layer.inputs != n
                || layer.weights.len() != layer.inputs * layer.outputs
                || layer.bias.len() != layer.outputs
            {
                return Err(Error::Format(format!("layer {i} has inconsistent shape")));
            }
            n = layer.outputs;
        }
        if n != 1 || m.network.layers.is_empty() {
            return Err(Error::Format("network must end in a single output".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Source of per-object perception costs.
#[derive(Debug, Clone, PartialEq)]
pub enum CostModel {
    /// Exact labels from the analytic detector.
    Oracle(OracleParams),
    Network(CostmapModel),
}

impl CostModel {
    /// Cost of observing `obj` from a camera pose.
    ///
    /// The network is only queried when the centroid is in view; otherwise
    /// the cost is 1, the label of a missed detection.
    pub fn cost_from_camera(
        &self,
        cam: &CameraPose,
        obj: &ObjectNode,
        scene: &SceneGraph,
        robot: &RobotModel,
    ) -> Result<f64> {
        match self {
            CostModel::Oracle(p) => {
                if !scene.class_vocabulary.contains(&obj.class_name) {
                    return Err(Error::UnknownClass(obj.class_name.clone()));
                }
                Ok(label_of(oracle_score(cam, obj, &scene.obstacles, p, robot)))
            }
            CostModel::Network(m) => {
                let class = m.encoder.class_index(&obj.class_name)?;
                if !in_fov(cam, &obj.centroid, robot) {
                    return Ok(1.0);
                }
                let x = m
                    .encoder
                    .encode_raw(&FeatureEncoder::raw_pose(cam, obj), class);
                Ok(m.network.predict(&x).clamp(0.0, 1.0))
            }
        }
    }
}

/// Per-object perception cost at a configuration.
pub fn perception_cost_of(
    q: &Configuration,
    obj: &ObjectNode,
    scene: &SceneGraph,
    robot: &RobotModel,
    model: &CostModel,
) -> Result<f64> {
    robot.check_limits(q)?;
    model.cost_from_camera(&camera_pose(q, robot), obj, scene, robot)
}

/// Weighted sum of per-object costs over the monitored objects.
pub fn aggregate_cost(
    q: &Configuration,
    scene: &SceneGraph,
    robot: &RobotModel,
    model: &CostModel,
) -> Result<f64> {
    let cam = camera_pose(q, robot);
    let mut total = 0.0;
    for obj in scene.monitored() {
        total += obj.weight * model.cost_from_camera(&cam, obj, scene, robot)?;
    }
    Ok(total)
}

/// `aggregate_cost` over many configurations, evaluated in parallel.
pub fn batch_cost(
    qs: &[Configuration],
    scene: &SceneGraph,
    robot: &RobotModel,
    model: &CostModel,
) -> Result<Vec<f64>> {
    qs.par_iter()
        .map(|q| aggregate_cost(q, scene, robot, model))
        .collect()
}
