//! Shared fixtures for the integration suites.

#![allow(dead_code)]

use gridfuse::features::ImageFeatureMap;
use gridfuse::geometry::{CameraModel, CartesianSpace, Pose, Space};
use gridfuse::grid::Grid;
use nalgebra::{Matrix3, Vector3};
use ndarray::{Array3, Array5};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Camera-to-vehicle rotation for a camera looking along vehicle +X.
pub fn forward_camera_rotation() -> Matrix3<f64> {
    Matrix3::new(0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0)
}

pub fn random_unit_vector(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 {
            return v / n;
        }
    }
}

pub fn random_pose(rng: &mut ChaCha8Rng, max_angle: f64, max_shift: f64) -> Pose {
    Pose::from_axis_angle(
        random_unit_vector(rng),
        rng.random_range(-max_angle..max_angle),
        Vector3::new(
            rng.random_range(-max_shift..max_shift),
            rng.random_range(-max_shift..max_shift),
            rng.random_range(-max_shift..max_shift),
        ),
        "vehicle",
    )
}

/// Random lattice with per-axis counts drawn from `counts`, anchored near
/// the origin.
pub fn random_space(rng: &mut ChaCha8Rng, counts: std::ops::RangeInclusive<usize>) -> CartesianSpace {
    let cell = rng.random_range(0.3..0.8);
    let nx = rng.random_range(counts.clone());
    let ny = rng.random_range(counts.clone());
    let nz = rng.random_range(counts);
    CartesianSpace::from_counts(
        Vector3::new(
            rng.random_range(-1.0..0.0),
            rng.random_range(-1.0..0.0),
            rng.random_range(-1.0..0.0),
        ),
        Vector3::new(cell, cell, cell),
        [nx, ny, nz],
    )
    .expect("random space is well formed")
}

/// Grid with values uniform in [0, 1).
pub fn random_grid(
    rng: &mut ChaCha8Rng,
    channels: usize,
    space: &CartesianSpace,
    pose: &Pose,
) -> Grid {
    let [z, x, y] = space.dims();
    let data = Array5::from_shape_fn((1, channels, z, x, y), |_| rng.random_range(0.0..1.0));
    Grid::new(data, Space::Cartesian(space.clone()), pose.clone()).expect("finite random grid")
}

/// Feature map with values uniform in [0, 1) for a camera at `position`
/// yawed by `yaw` from vehicle +X.
pub fn random_feature_map(
    rng: &mut ChaCha8Rng,
    channels: usize,
    image_size: (usize, usize),
    stride: usize,
    position: Vector3<f64>,
    yaw: f64,
) -> ImageFeatureMap {
    let (s, c) = yaw.sin_cos();
    let yaw_rot = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
    let pose = Pose::new(yaw_rot * forward_camera_rotation(), position, "vehicle")
        .expect("orthonormal");
    let (rows, cols) = image_size;
    let camera = CameraModel::new(
        (cols as f64 * 0.7, cols as f64 * 0.7),
        ((cols as f64 - 1.0) / 2.0, (rows as f64 - 1.0) / 2.0),
        image_size,
        pose,
    )
    .expect("valid camera");
    let data = Array3::from_shape_fn((channels, rows / stride, cols / stride), |_| {
        rng.random_range(0.0f32..1.0)
    });
    ImageFeatureMap::new(data, camera, stride).expect("valid map")
}

pub fn grid_dot(a: &Grid, b: &Grid) -> f64 {
    a.data()
        .iter()
        .zip(b.data().iter())
        .map(|(&x, &y)| x as f64 * y as f64)
        .sum()
}

pub fn max_abs_diff(a: &Grid, b: &Grid) -> f32 {
    a.data()
        .iter()
        .zip(b.data().iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f32::max)
}
