//! Canonical spaces, sensor profiles, and camera rigs.
//!
//! The panoramic rig pairs a roof LiDAR with a ring of wide-FOV cameras:
//! voxel encoders span +/-51.2 m in x and y and -2 m..12 m in z, with
//! 0.32 m pillars for the LiDAR encoder and 0.4 m x 0.4 m x 1 m voxels for
//! the camera uplift. The forward-stereo rig covers -36 m..36 m laterally
//! and 0..60 m ahead at 0.3 m x 0.3 m x 0.5 m.

use nalgebra::{Matrix3, Vector3};

use crate::geometry::{CameraModel, CartesianSpace, Pose};
use crate::lidar::{DetectionProbability, LidarProfile};
use crate::stereo::inverse_depth_planes;

/// LiDAR encoder lattice of the panoramic rig: (Z, X, Y) = (1, 320, 320).
pub fn panoramic_lidar_space() -> CartesianSpace {
    CartesianSpace::new(
        Vector3::new(-51.2, -51.2, -2.0),
        Vector3::new(51.2, 51.2, 12.0),
        Vector3::new(0.32, 0.32, 14.0),
    )
    .expect("preset space is well formed")
}

/// Camera-uplift lattice of the panoramic rig: (Z, X, Y) = (14, 256, 256).
pub fn panoramic_raycast_space() -> CartesianSpace {
    CartesianSpace::new(
        Vector3::new(-51.2, -51.2, -2.0),
        Vector3::new(51.2, 51.2, 12.0),
        Vector3::new(0.4, 0.4, 1.0),
    )
    .expect("preset space is well formed")
}

/// Forward-stereo Cartesian lattice: (Z, X, Y) = (12, 240, 200).
pub fn stereo_cartesian_space() -> CartesianSpace {
    CartesianSpace::new(
        Vector3::new(-36.0, 0.0, -1.0),
        Vector3::new(36.0, 60.0, 5.0),
        Vector3::new(0.3, 0.3, 0.5),
    )
    .expect("preset space is well formed")
}

/// High-density roof LiDAR: 64 beams at 0.2 degree azimuth steps.
pub fn hd_profile(seed: u64) -> LidarProfile {
    LidarProfile::new(64, 0.2, (-24.8, 2.0), DetectionProbability::always(), seed)
        .expect("preset profile is well formed")
}

/// Low-density roof LiDAR: 13 beams at 2 degree azimuth steps; at most
/// 2,340 returns per scan.
pub fn ld_profile(seed: u64) -> LidarProfile {
    LidarProfile::new(13, 2.0, (-24.8, 2.0), DetectionProbability::always(), seed)
        .expect("preset profile is well formed")
}

/// Default stereo depth planes: 48 planes uniform in inverse depth from
/// 2 m to 60 m.
pub fn stereo_depth_planes() -> Vec<f64> {
    inverse_depth_planes(2.0, 60.0, 48).expect("preset planes are well formed")
}

/// Rotation of a forward-facing camera relative to the vehicle frame:
/// camera Z (optical axis) -> vehicle +X, camera X (right) -> vehicle -Y,
/// camera Y (down) -> vehicle -Z.
pub fn forward_camera_rotation() -> Matrix3<f64> {
    Matrix3::new(0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0)
}

/// Camera pose looking outward at `yaw` radians from vehicle +X, mounted
/// at `position`.
pub fn outward_camera_pose(yaw: f64, position: Vector3<f64>) -> Pose {
    let (s, c) = yaw.sin_cos();
    let yaw_rot = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
    Pose::new(yaw_rot * forward_camera_rotation(), position, "vehicle")
        .expect("rotation product stays orthonormal")
}

/// A ring of `count` identical outward-facing cameras with the given
/// horizontal field of view, mounted at `height` above the vehicle origin.
/// Adjacent frustums overlap whenever `hfov_deg > 360 / count`.
pub fn camera_ring(
    count: usize,
    image_size: (usize, usize),
    hfov_deg: f64,
    height: f64,
) -> Vec<CameraModel> {
    (0..count)
        .map(|k| {
            let yaw = k as f64 * std::f64::consts::TAU / count as f64;
            ring_camera(yaw, image_size, hfov_deg, height)
        })
        .collect()
}

fn ring_camera(yaw: f64, image_size: (usize, usize), hfov_deg: f64, height: f64) -> CameraModel {
    let (rows, cols) = image_size;
    let fx = cols as f64 / 2.0 / (hfov_deg.to_radians() / 2.0).tan();
    let principal = ((cols as f64 - 1.0) / 2.0, (rows as f64 - 1.0) / 2.0);
    CameraModel::new(
        (fx, fx),
        principal,
        image_size,
        outward_camera_pose(yaw, Vector3::new(0.0, 0.0, height)),
    )
    .expect("preset camera is well formed")
}

/// A rectified forward-facing stereo pair with the given baseline (meters):
/// identical intrinsics, right camera displaced along the camera X axis.
pub fn stereo_pair(
    image_size: (usize, usize),
    hfov_deg: f64,
    baseline: f64,
    height: f64,
) -> (CameraModel, CameraModel) {
    let (rows, cols) = image_size;
    let fx = cols as f64 / 2.0 / (hfov_deg.to_radians() / 2.0).tan();
    let principal = ((cols as f64 - 1.0) / 2.0, (rows as f64 - 1.0) / 2.0);
    let make = |y: f64| {
        CameraModel::new(
            (fx, fx),
            principal,
            image_size,
            outward_camera_pose(0.0, Vector3::new(0.0, y, height)),
        )
        .expect("preset camera is well formed")
    };
    // Camera X is vehicle -Y: the right camera sits at lower vehicle y.
    (make(baseline / 2.0), make(-baseline / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_lattice_dims() {
        assert_eq!(panoramic_lidar_space().dims(), [1, 320, 320]);
        assert_eq!(panoramic_raycast_space().dims(), [14, 256, 256]);
        assert_eq!(stereo_cartesian_space().dims(), [12, 240, 200]);
    }

    #[test]
    fn profile_budgets_match_configurations() {
        assert_eq!(hd_profile(0).max_points_per_scan(), 64 * 1800);
        assert_eq!(ld_profile(0).max_points_per_scan(), 2340);
    }

    #[test]
    fn ring_cameras_look_outward() {
        let ring = camera_ring(6, (192, 320), 80.0, 2.0);
        assert_eq!(ring.len(), 6);
        // Camera 0 looks along +x: a point ahead projects near the center.
        let p = ring[0].project(&Vector3::new(10.0, 0.0, 2.0));
        assert!(p.valid);
        assert!((p.u - 159.5).abs() < 1e-9);
        // Camera 3 looks along -x.
        let p = ring[3].project(&Vector3::new(-10.0, 0.0, 2.0));
        assert!(p.valid);
    }

    #[test]
    fn stereo_pair_is_rectified_with_positive_disparity() {
        let (left, right) = stereo_pair((144, 240), 65.0, 0.356, 1.5);
        let point = Vector3::new(12.0, 1.0, 1.5);
        let pl = left.project(&point);
        let pr = right.project(&point);
        assert!(pl.valid && pr.valid);
        assert!(pl.u > pr.u, "left u {} vs right u {}", pl.u, pr.u);
        assert!((pl.v - pr.v).abs() < 1e-9);
        let fx = left.focal().0;
        let expected = fx * 0.356 / pl.depth;
        assert!((pl.u - pr.u - expected).abs() < 1e-9);
    }

    #[test]
    fn stereo_planes_span_two_to_sixty_meters() {
        let planes = stereo_depth_planes();
        assert_eq!(planes.len(), 48);
        assert!((planes[0] - 2.0).abs() < 1e-12);
        assert!((planes[47] - 60.0).abs() < 1e-9);
    }
}
