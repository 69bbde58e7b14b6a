use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::Pose;

/// Minimum depth (meters) in front of the image plane for a projection to be
/// considered valid; guards the perspective divide.
pub const EPS_DEPTH: f64 = 1e-3;

/// Pinhole camera: intrinsics, image size, and a camera-to-reference pose.
///
/// The camera frame is Z forward, X right, Y down. Pixel coordinates follow
/// the usual convention of `u = fx * x/z + cx` (columns) and
/// `v = fy * y/z + cy` (rows), with pixel centers at integer coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    focal: (f64, f64),
    principal: (f64, f64),
    /// (rows, cols) in pixels.
    image_size: (usize, usize),
    pose: Pose,
}

/// Result of projecting a world point through a [`CameraModel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Column coordinate, full-resolution pixels.
    pub u: f64,
    /// Row coordinate, full-resolution pixels.
    pub v: f64,
    /// Depth along the optical axis, meters.
    pub depth: f64,
    /// True when the point is in front of the camera and (u, v) rounds to a
    /// pixel inside the image.
    pub valid: bool,
}

impl CameraModel {
    pub fn new(
        focal: (f64, f64),
        principal: (f64, f64),
        image_size: (usize, usize),
        pose: Pose,
    ) -> Result<Self> {
        if focal.0 <= 0.0 || focal.1 <= 0.0 || !focal.0.is_finite() || !focal.1.is_finite() {
            return Err(Error::invalid(
                "camera focal length",
                format!("({}, {}) must be positive finite", focal.0, focal.1),
            ));
        }
        let (rows, cols) = image_size;
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("camera image size", "zero-sized image"));
        }
        if principal.0 < 0.0
            || principal.0 >= cols as f64
            || principal.1 < 0.0
            || principal.1 >= rows as f64
        {
            return Err(Error::invalid(
                "camera principal point",
                format!(
                    "({}, {}) outside image {}x{}",
                    principal.0, principal.1, rows, cols
                ),
            ));
        }
        Ok(Self {
            focal,
            principal,
            image_size,
            pose,
        })
    }

    pub fn focal(&self) -> (f64, f64) {
        self.focal
    }

    pub fn principal_point(&self) -> (f64, f64) {
        self.principal
    }

    /// (rows, cols) in pixels.
    pub fn image_size(&self) -> (usize, usize) {
        self.image_size
    }

    /// Camera-to-reference pose.
    pub fn pose(&self) -> &Pose {
        &self.pose
    }

    /// Projects a point given in the camera's own frame.
    pub fn project_camera_frame(&self, p_cam: &Vector3<f64>) -> Projection {
        let depth = p_cam.z;
        if depth <= EPS_DEPTH {
            return Projection {
                u: 0.0,
                v: 0.0,
                depth,
                valid: false,
            };
        }
        let u = self.focal.0 * p_cam.x / depth + self.principal.0;
        let v = self.focal.1 * p_cam.y / depth + self.principal.1;
        let (rows, cols) = self.image_size;
        // Valid when (u, v) rounds to a pixel inside the image.
        let valid = u >= -0.5 && u < cols as f64 - 0.5 && v >= -0.5 && v < rows as f64 - 0.5;
        Projection { u, v, depth, valid }
    }

    /// Projects a point in the camera pose's base frame onto the image.
    ///
    /// Invalid projections (behind the camera, off the image) are signalled
    /// by [`Projection::valid`], never by an error.
    pub fn project(&self, point_world: &Vector3<f64>) -> Projection {
        let p_cam = self.pose.inverse().apply(point_world);
        self.project_camera_frame(&p_cam)
    }

    /// Lifts a pixel coordinate at a given depth back to the camera pose's
    /// base frame; the right inverse of [`CameraModel::project`].
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        let p_cam = Vector3::new(
            (u - self.principal.0) / self.focal.0 * depth,
            (v - self.principal.1) / self.focal.1 * depth,
            depth,
        );
        self.pose.apply(&p_cam)
    }
}
