use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::oracle::{label_of, oracle_score, OracleParams};
use crate::error::{Error, Result};
use crate::geometry::{in_fov, CameraPose, RobotModel};
use crate::scenegraph::SceneGraph;

/// Closest camera distance considered when sampling views, meters.
pub const MIN_VIEW_DISTANCE: f64 = 0.3;

const MAX_ATTEMPTS: usize = 1000;

/// One supervised example: a camera pose, the observed object and its label.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptionSample {
    pub camera: CameraPose,
    pub object_id: String,
    pub score: f64,
    pub label: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    px: f64,
    py: f64,
    pz: f64,
    qw: f64,
    qx: f64,
    qy: f64,
    qz: f64,
    object_id: String,
    score: f64,
    label: f64,
}

/// Samples camera views around monitored objects and scores them with the oracle.
///
/// The camera sits at the robot's mount height, at a uniformly drawn distance
/// and azimuth from the chosen centroid, and is aimed at it with angular
/// jitter that keeps the centroid inside the frustum. Camera positions outside
/// the workspace or inside an obstacle are redrawn.
pub fn generate_dataset(
    scene: &SceneGraph,
    robot: &RobotModel,
    params: &OracleParams,
    count: usize,
    seed: u64,
) -> Result<Vec<PerceptionSample>> {
    if count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    params.validate()?;
    let monitored: Vec<_> = scene.monitored().collect();
    if monitored.is_empty() {
        return Err(Error::EmptyInput("scene has no monitored objects"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_dist = 2.0 * params.optimal_distance + 3.0 * params.distance_sigma;
    let height = robot.camera_mount.z;
    let [tilt_lo, tilt_hi] = robot.tilt_limits;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let obj = monitored[rng.random_range(0..monitored.len())];
        let mut placed = None;
        for _ in 0..MAX_ATTEMPTS {
            let r = rng.random_range(MIN_VIEW_DISTANCE..max_dist);
            let az = rng.random_range(-PI..PI);
            let dz = height - obj.centroid.z;
            if r <= dz.abs() {
                continue;
            }
            let horiz = (r * r - dz * dz).sqrt();
            let pitch = (-dz).atan2(horiz);
            if pitch < tilt_lo || pitch > tilt_hi {
                continue;
            }
            let center = obj.centroid + Vector3::new(horiz * az.cos(), horiz * az.sin(), dz);
            if !scene.workspace.contains(&center)
                || scene.obstacles.iter().any(|o| o.contains(&center))
            {
                continue;
            }
            placed = Some((center, az + PI, pitch));
            break;
        }
        let (center, yaw0, pitch0) = placed.ok_or(Error::SamplingFailed {
            attempts: MAX_ATTEMPTS,
            reason: "no camera height-compatible view of the object",
        })?;
        let mut camera = None;
        for _ in 0..MAX_ATTEMPTS {
            let yaw = yaw0 + rng.random_range(-robot.fov_half_angle_h..=robot.fov_half_angle_h);
            let pitch = pitch0 + rng.random_range(-robot.fov_half_angle_v..=robot.fov_half_angle_v);
            if pitch < tilt_lo || pitch > tilt_hi {
                continue;
            }
            let cam = CameraPose::from_yaw_pitch(center, yaw, pitch);
            if in_fov(&cam, &obj.centroid, robot) {
                camera = Some(cam);
                break;
            }
        }
        let camera = camera.ok_or(Error::SamplingFailed {
            attempts: MAX_ATTEMPTS,
            reason: "jittered view never contained the object",
        })?;
        let score = oracle_score(&camera, obj, &scene.obstacles, params, robot);
        out.push(PerceptionSample {
            camera,
            object_id: obj.id.clone(),
            score,
            label: label_of(score),
        });
    }
    Ok(out)
}

pub fn write_dataset(samples: &[PerceptionSample], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for s in samples {
        let q = s.camera.orientation();
        w.serialize(Record {
            px: s.camera.center.x,
            py: s.camera.center.y,
            pz: s.camera.center.z,
            qw: q.w,
            qx: q.i,
            qy: q.j,
            qz: q.k,
            object_id: s.object_id.clone(),
            score: s.score,
            label: s.label,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<PerceptionSample>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        let rec: Record = rec?;
        if !(0.0..=1.0).contains(&rec.score) || (rec.label - label_of(rec.score)).abs() > 1e-12 {
            return Err(Error::Format(format!(
                "record {}: label does not match score",
                out.len()
            )));
        }
        let q = UnitQuaternion::from_quaternion(Quaternion::new(rec.qw, rec.qx, rec.qy, rec.qz));
        out.push(PerceptionSample {
            camera: CameraPose::from_orientation(Vector3::new(rec.px, rec.py, rec.pz), &q),
            object_id: rec.object_id,
            score: rec.score,
            label: rec.label,
        });
    }
    Ok(out)
}
