use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::config::{ConfigMetric, Configuration, DOF};
use crate::error::{Error, Result};

/// Mobile base with a pan-tilt camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    /// Radius of the base disc, meters.
    pub base_radius: f64,
    /// Camera center in the base frame (x forward, y left, z up), meters.
    pub camera_mount: Vector3<f64>,
    pub pan_limits: [f64; 2],
    pub tilt_limits: [f64; 2],
    pub fov_half_angle_h: f64,
    pub fov_half_angle_v: f64,
    pub max_range: f64,
    #[serde(default)]
    pub metric: ConfigMetric,
}

impl Default for RobotModel {
    fn default() -> Self {
        Self {
            base_radius: 0.25,
            camera_mount: Vector3::new(0.1, 0.0, 1.3),
            pan_limits: [-1.8, 1.8],
            tilt_limits: [-1.0, 0.5],
            fov_half_angle_h: 0.61,
            fov_half_angle_v: 0.43,
            max_range: 8.0,
            metric: ConfigMetric::default(),
        }
    }
}

impl RobotModel {
    pub fn validate(&self) -> Result<()> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        if !(self.base_radius > 0.0) {
            return Err(Error::param("base_radius", "must be positive"));
        }
        for (name, a) in [
            ("fov_half_angle_h", self.fov_half_angle_h),
            ("fov_half_angle_v", self.fov_half_angle_v),
        ] {
            if !(a > 0.0 && a < half_pi) {
                return Err(Error::param(name, "must lie in (0, pi/2)"));
            }
        }
        if !(self.max_range > 0.0) {
            return Err(Error::param("max_range", "must be positive"));
        }
        if !(self.pan_limits[0] <= self.pan_limits[1]) {
            return Err(Error::param(
                "pan_limits",
                "lower bound exceeds upper bound",
            ));
        }
        if !(self.tilt_limits[0] <= self.tilt_limits[1]) {
            return Err(Error::param(
                "tilt_limits",
                "lower bound exceeds upper bound",
            ));
        }
        if self.metric.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::param("metric.weights", "must be positive"));
        }
        Ok(())
    }

    pub fn within_limits(&self, q: &Configuration) -> bool {
        q.is_finite()
            && q.pan >= self.pan_limits[0]
            && q.pan <= self.pan_limits[1]
            && q.tilt >= self.tilt_limits[0]
            && q.tilt <= self.tilt_limits[1]
    }

    pub fn check_limits(&self, q: &Configuration) -> Result<()> {
        if self.within_limits(q) {
            Ok(())
        } else {
            Err(Error::InvalidConfiguration(format!(
                "{q:?} outside joint limits pan {:?} tilt {:?}",
                self.pan_limits, self.tilt_limits
            )))
        }
    }

    /// Clamps pan and tilt into the joint limits.
    pub fn clamp_joints(&self, q: &Configuration) -> Configuration {
        Configuration {
            pan: q.pan.clamp(self.pan_limits[0], self.pan_limits[1]),
            tilt: q.tilt.clamp(self.tilt_limits[0], self.tilt_limits[1]),
            ..*q
        }
    }
}

/// Camera center, optical axis and up vector in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub center: Vector3<f64>,
    pub optical_axis: Vector3<f64>,
    pub up: Vector3<f64>,
}

impl CameraPose {
    /// Builds a level camera (no roll) looking along `yaw`/`pitch` from `center`.
    pub fn from_yaw_pitch(center: Vector3<f64>, yaw: f64, pitch: f64) -> Self {
        let (sy, cy) = yaw.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        Self {
            center,
            optical_axis: Vector3::new(cp * cy, cp * sy, sp),
            up: Vector3::new(-sp * cy, -sp * sy, cp),
        }
    }

    /// Lateral axis completing the right-handed (axis, left, up) frame.
    pub fn left(&self) -> Vector3<f64> {
        self.up.cross(&self.optical_axis)
    }

    /// Expresses a world point in the camera frame as (forward, left, up).
    pub fn to_camera_frame(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let v = p - self.center;
        Vector3::new(
            v.dot(&self.optical_axis),
            v.dot(&self.left()),
            v.dot(&self.up),
        )
    }

    /// Expresses a world direction in the camera frame.
    pub fn rotate_to_camera(&self, d: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(
            d.dot(&self.optical_axis),
            d.dot(&self.left()),
            d.dot(&self.up),
        )
    }

    /// Orientation as a unit quaternion whose rotation maps (x, y, z) to (axis, left, up).
    pub fn orientation(&self) -> UnitQuaternion<f64> {
        let m = Matrix3::from_columns(&[self.optical_axis, self.left(), self.up]);
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m))
    }

    pub fn from_orientation(center: Vector3<f64>, q: &UnitQuaternion<f64>) -> Self {
        Self {
            center,
            optical_axis: q * Vector3::x(),
            up: q * Vector3::z(),
        }
    }
}

/// Camera pose for a configuration.
///
/// The camera sits at `camera_mount` in the base frame; at zero pan and tilt
/// the optical axis is the base +x axis. Pan yaws about the vertical, tilt
/// pitches about the camera's left axis (positive tilt looks up).
pub fn forward_kinematics(q: &Configuration, robot: &RobotModel) -> Result<CameraPose> {
    robot.check_limits(q)?;
    Ok(camera_pose(q, robot))
}

/// Forward kinematics without the joint-limit check.
pub(crate) fn camera_pose(q: &Configuration, robot: &RobotModel) -> CameraPose {
    let (s, c) = q.theta.sin_cos();
    let m = &robot.camera_mount;
    let center = Vector3::new(q.x + c * m.x - s * m.y, q.y + s * m.x + c * m.y, m.z);
    CameraPose::from_yaw_pitch(center, q.theta + q.pan, q.tilt)
}

/// Partial derivatives of camera center and optical axis with respect to each DoF.
pub(crate) struct FkJacobian {
    pub d_center: [Vector3<f64>; DOF],
    pub d_axis: [Vector3<f64>; DOF],
}

pub(crate) fn camera_pose_jacobian(
    q: &Configuration,
    robot: &RobotModel,
) -> (CameraPose, FkJacobian) {
    let cam = camera_pose(q, robot);
    let (s, c) = q.theta.sin_cos();
    let m = &robot.camera_mount;
    let (sy, cy) = (q.theta + q.pan).sin_cos();
    let (st, ct) = q.tilt.sin_cos();
    let zero = Vector3::zeros();
    let d_yaw = Vector3::new(-ct * sy, ct * cy, 0.0);
    let d_tilt = Vector3::new(-st * cy, -st * sy, ct);
    let jac = FkJacobian {
        d_center: [
            Vector3::x(),
            Vector3::y(),
            Vector3::new(-s * m.x - c * m.y, c * m.x - s * m.y, 0.0),
            zero,
            zero,
        ],
        d_axis: [zero, zero, d_yaw, d_yaw, d_tilt],
    };
    (cam, jac)
}

/// Component of the camera-to-target vector orthogonal to the optical axis.
pub fn lateral_residual(
    q: &Configuration,
    target: &Vector3<f64>,
    robot: &RobotModel,
) -> Vector3<f64> {
    residual_of(&camera_pose(q, robot), target)
}

pub fn residual_of(cam: &CameraPose, target: &Vector3<f64>) -> Vector3<f64> {
    let v = target - cam.center;
    let z = &cam.optical_axis;
    v - z * z.dot(&v)
}

/// Squared lateral residual and its gradient with respect to the raw DoFs.
pub fn lateral_residual_sq_grad(
    q: &Configuration,
    target: &Vector3<f64>,
    robot: &RobotModel,
) -> (f64, [f64; DOF]) {
    let (cam, jac) = camera_pose_jacobian(q, robot);
    let v = target - cam.center;
    let z = cam.optical_axis;
    let zv = z.dot(&v);
    let value = (v.norm_squared() - zv * zv).max(0.0);
    let grad = std::array::from_fn(|i| {
        let dm = &jac.d_center[i];
        let dz = &jac.d_axis[i];
        -2.0 * v.dot(dm) - 2.0 * zv * (dz.dot(&v) - z.dot(dm))
    });
    (value, grad)
}

/// Whether a point lies inside the camera's viewing frustum.
pub fn in_fov(cam: &CameraPose, point: &Vector3<f64>, robot: &RobotModel) -> bool {
    let p = cam.to_camera_frame(point);
    if !(p.x > 0.0) {
        return false;
    }
    if p.norm() > robot.max_range {
        return false;
    }
    p.y.abs().atan2(p.x) <= robot.fov_half_angle_h && p.z.abs().atan2(p.x) <= robot.fov_half_angle_v
}
