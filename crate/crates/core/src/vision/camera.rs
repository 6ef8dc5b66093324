//! Perspective projection, the image Jacobian and the sensitivity chain.

use nalgebra::{Matrix2x3, Point3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::vision::RigidTransform;
use crate::Result;

/// Points closer to the image plane than this depth are "behind" the camera.
pub const EPS_DEPTH: f64 = 1e-6;

/// Pinhole intrinsics (no lens distortion; images are assumed rectified).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        if fx <= 0.0 || fy <= 0.0 {
            return Err(Error::argument("focal lengths must be positive"));
        }
        if cx < 0.0 || cx >= width as f64 || cy < 0.0 || cy >= height as f64 {
            return Err(Error::argument("principal point outside the image"));
        }
        Ok(CameraModel {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    pub fn in_bounds(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && u < self.width as f64 && v >= 0.0 && v < self.height as f64
    }
}

/// Object-frame point expressed in the camera frame: X_C = w_T_c^-1 w_T_o X.
pub fn camera_frame_point(
    w_t_c: &RigidTransform,
    w_t_o: &RigidTransform,
    x_obj: &Point3<f64>,
) -> Point3<f64> {
    w_t_c.inverse().transform_point(&w_t_o.transform_point(x_obj))
}

/// Projects an object-frame point to pixel coordinates.
///
/// Fails when the camera-frame depth is at or below [`EPS_DEPTH`].
pub fn project_point(
    camera: &CameraModel,
    w_t_c: &RigidTransform,
    w_t_o: &RigidTransform,
    x_obj: &Point3<f64>,
) -> Result<(f64, f64)> {
    let xc = camera_frame_point(w_t_c, w_t_o, x_obj);
    if xc.z <= EPS_DEPTH {
        return Err(Error::BehindCamera { z_c: xc.z });
    }
    Ok((
        camera.fx * xc.x / xc.z + camera.cx,
        camera.fy * xc.y / xc.z + camera.cy,
    ))
}

/// Camera-frame ray of a pixel at a given depth (inverse projection).
pub fn back_project(camera: &CameraModel, u: f64, v: f64, depth: f64) -> Point3<f64> {
    Point3::new(
        (u - camera.cx) * depth / camera.fx,
        (v - camera.cy) * depth / camera.fy,
        depth,
    )
}

/// Derivative of pixel coordinates with respect to the camera-frame position:
///
/// ```text
/// [ fx/Z    0    -fx X/Z^2 ]
/// [  0     fy/Z  -fy Y/Z^2 ]
/// ```
pub fn image_jacobian(camera: &CameraModel, x_c: &Point3<f64>) -> Result<Matrix2x3<f64>> {
    if x_c.z <= EPS_DEPTH {
        return Err(Error::BehindCamera { z_c: x_c.z });
    }
    let z2 = x_c.z * x_c.z;
    Ok(Matrix2x3::new(
        camera.fx / x_c.z,
        0.0,
        -camera.fx * x_c.x / z2,
        0.0,
        camera.fy / x_c.z,
        -camera.fy * x_c.y / z2,
    ))
}

/// Chain rule from an object-frame sensitivity vector to pixel space:
/// j_k = J_img * R_c^-1 * R_o * J_k.
///
/// Only the rotation parts of the frame chain act on the derivative vector
/// (translations differentiate away); passing full affine transforms through
/// a derivative would be wrong, hence the explicit rotation-only composition.
pub fn project_sensitivity(
    jac_img: &Matrix2x3<f64>,
    w_t_c: &RigidTransform,
    w_t_o: &RigidTransform,
    j_obj: &Vector3<f64>,
) -> Vector2<f64> {
    let j_world = w_t_o.rotate_vector(j_obj);
    let j_cam = w_t_c.rotation().transpose() * j_world;
    jac_img * j_cam
}
