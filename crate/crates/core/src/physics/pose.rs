//! Platform pose from a least-squares rigid fit of the platform nodes.

use nalgebra::{Matrix3, Rotation3};
use serde::{Deserialize, Serialize};

use super::model::SoftBodyModel;
use super::{SimState, Vec3};

/// Platform position (mm) and Z-Y-X Euler angles (degrees, in (−180, 180]).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BasePose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl BasePose {
    pub fn position(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }
}

fn wrap_degrees(a: f64) -> f64 {
    let mut a = a.rem_euclid(360.0);
    if a > 180.0 {
        a -= 360.0;
    }
    if a <= -180.0 {
        a += 360.0;
    }
    a
}

/// Decomposes `R = Rz(yaw)·Ry(pitch)·Rx(roll)`, returning degrees.
pub fn rotation_to_euler_zyx(r: &Matrix3<f64>) -> (f64, f64, f64) {
    let roll = r[(2, 1)].atan2(r[(2, 2)]);
    let pitch = (-r[(2, 0)]).clamp(-1.0, 1.0).asin();
    let yaw = r[(1, 0)].atan2(r[(0, 0)]);
    (
        wrap_degrees(roll.to_degrees()),
        wrap_degrees(pitch.to_degrees()),
        wrap_degrees(yaw.to_degrees()),
    )
}

/// Best-fit rotation taking the centred point set `from` onto `to`.
fn procrustes_rotation(from: &[Vec3], to: &[Vec3]) -> Matrix3<f64> {
    let mut h = Matrix3::zeros();
    for (a, b) in from.iter().zip(to) {
        h += a * b.transpose();
    }
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("svd u"), svd.v_t.expect("svd v"));
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let mut s = Matrix3::identity();
    s[(2, 2)] = d;
    v * s * u.transpose()
}

pub fn base_pose(model: &SoftBodyModel, state: &SimState) -> BasePose {
    let ids = &model.platform_node_ids;
    let rest_c = ids.iter().map(|&i| model.rest_positions[i]).sum::<Vec3>() / ids.len() as f64;
    let cur_c = state.centroid(ids);
    let from: Vec<Vec3> = ids.iter().map(|&i| model.rest_positions[i] - rest_c).collect();
    let to: Vec<Vec3> = ids.iter().map(|&i| state.positions[i] - cur_c).collect();
    let r = procrustes_rotation(&from, &to);
    let (roll, pitch, yaw) = rotation_to_euler_zyx(&r);
    BasePose {
        x: cur_c.x,
        y: cur_c.y,
        z: cur_c.z,
        roll,
        pitch,
        yaw,
    }
}

/// Rotation matrix for Z-Y-X Euler angles in degrees.
pub fn euler_zyx_to_rotation(roll: f64, pitch: f64, yaw: f64) -> Matrix3<f64> {
    Rotation3::from_euler_angles(roll.to_radians(), pitch.to_radians(), yaw.to_radians()).into_inner()
}
