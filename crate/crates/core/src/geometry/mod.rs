//! Configurations, camera kinematics, visibility and collision primitives.

mod config;
mod obstacle;
mod robot;

pub use config::{wrap_angle, ConfigMetric, Configuration, DOF};
pub use obstacle::{config_in_collision, occluded, Obstacle};
pub use robot::{
    forward_kinematics, in_fov, lateral_residual, lateral_residual_sq_grad, residual_of,
    CameraPose, RobotModel,
};

pub(crate) use robot::camera_pose;
