use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{in_fov, occluded, CameraPose, Obstacle, RobotModel};
use crate::scenegraph::ObjectNode;

/// Parameters of the analytic detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    /// Distance at which detection is best, meters.
    pub optimal_distance: f64,
    pub distance_sigma: f64,
    /// Exponent on the cosine of the off-axis angle.
    pub axis_exponent: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            optimal_distance: 2.0,
            distance_sigma: 1.0,
            axis_exponent: 4.0,
        }
    }
}

impl OracleParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("optimal_distance", self.optimal_distance),
            ("distance_sigma", self.distance_sigma),
            ("axis_exponent", self.axis_exponent),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, "must be positive"));
            }
        }
        Ok(())
    }
}

/// Detection confidence in `[0, 1]` for an object seen from a camera pose.
///
/// Zero when the centroid is outside the frustum or hidden behind an obstacle.
/// Otherwise a product of a Gaussian range term, an off-axis falloff and the
/// cosine between the face normal and the direction back to the camera.
pub fn oracle_score(
    cam: &CameraPose,
    obj: &ObjectNode,
    obstacles: &[Obstacle],
    params: &OracleParams,
    robot: &RobotModel,
) -> f64 {
    if !in_fov(cam, &obj.centroid, robot) || occluded(cam, &obj.centroid, obstacles) {
        return 0.0;
    }
    unoccluded_score(cam, &obj.centroid, &obj.face_normal, params)
}

pub(crate) fn unoccluded_score(
    cam: &CameraPose,
    centroid: &Vector3<f64>,
    face_normal: &Vector3<f64>,
    params: &OracleParams,
) -> f64 {
    let v = centroid - cam.center;
    let d = v.norm();
    if d == 0.0 {
        return 0.0;
    }
    let dir = v / d;
    let cos_axis = cam.optical_axis.dot(&dir).clamp(0.0, 1.0);
    let cos_face = (-face_normal.dot(&dir)).max(0.0);
    let dd = d - params.optimal_distance;
    let range = (-dd * dd / (2.0 * params.distance_sigma * params.distance_sigma)).exp();
    (range * cos_axis.powf(params.axis_exponent) * cos_face).clamp(0.0, 1.0)
}

/// Perception cost label for a detection score.
#[inline]
pub fn label_of(score: f64) -> f64 {
    (1.0 - score) * (1.0 - score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{forward_kinematics, Configuration};
    use proptest::prelude::*;

    fn monitor() -> ObjectNode {
        ObjectNode {
            id: "m".into(),
            class_name: "monitor".into(),
            centroid: Vector3::new(0.0, 0.0, 1.0),
            face_normal: Vector3::new(-1.0, 0.0, 0.0),
            extent: Vector3::new(0.05, 0.5, 0.3),
            weight: 1.0,
        }
    }

    fn looking_at(from: Vector3<f64>, to: Vector3<f64>) -> CameraPose {
        let v = to - from;
        CameraPose::from_yaw_pitch(from, v.y.atan2(v.x), v.z.atan2(v.xy().norm()))
    }

    #[test]
    fn perfect_view_scores_one() {
        let o = monitor();
        let p = OracleParams::default();
        let cam = looking_at(o.centroid + o.face_normal * p.optimal_distance, o.centroid);
        let s = oracle_score(&cam, &o, &[], &p, &RobotModel::default());
        assert!((s - 1.0).abs() < 1e-12);
        assert!(label_of(s) < 1e-20);
    }

    #[test]
    fn back_view_scores_zero() {
        let o = monitor();
        let cam = looking_at(o.centroid - o.face_normal * 2.0, o.centroid);
        let s = oracle_score(
            &cam,
            &o,
            &[],
            &OracleParams::default(),
            &RobotModel::default(),
        );
        assert_eq!(s, 0.0);
        assert_eq!(label_of(s), 1.0);
    }

    #[test]
    fn one_sigma_off_range() {
        let o = monitor();
        let p = OracleParams::default();
        let cam = looking_at(o.centroid + o.face_normal * 3.0, o.centroid);
        let s = oracle_score(&cam, &o, &[], &p, &RobotModel::default());
        let expected = (-0.5f64).exp();
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 0.60653).abs() < 1e-5);
        assert!((label_of(s) - 0.15482).abs() < 1e-5);
    }

    #[test]
    fn occluder_and_frustum_zero_the_score() {
        let o = monitor();
        let p = OracleParams::default();
        let from = o.centroid + o.face_normal * 2.0;
        let wall = Obstacle::Box {
            min: Vector3::new(-1.2, -1.0, 0.0),
            max: Vector3::new(-1.0, 1.0, 2.0),
        };
        let cam = looking_at(from, o.centroid);
        assert_eq!(
            oracle_score(&cam, &o, &[wall], &p, &RobotModel::default()),
            0.0
        );
        let away = CameraPose::from_yaw_pitch(from, std::f64::consts::PI, 0.0);
        assert_eq!(
            oracle_score(&away, &o, &[], &p, &RobotModel::default()),
            0.0
        );
    }

    proptest! {
        #[test]
        fn score_in_unit_interval(
            x in -6.0f64..6.0, y in -6.0f64..6.0, th in -3.1f64..3.1,
            pan in -1.8f64..1.8, tilt in -1.0f64..0.5,
        ) {
            let robot = RobotModel::default();
            let cam = forward_kinematics(&Configuration::new(x, y, th, pan, tilt), &robot).unwrap();
            let s = oracle_score(&cam, &monitor(), &[], &OracleParams::default(), &robot);
            prop_assert!((0.0..=1.0).contains(&s));
        }

        #[test]
        fn label_decreasing(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            if a < b {
                prop_assert!(label_of(a) >= label_of(b));
            }
        }
    }
}
