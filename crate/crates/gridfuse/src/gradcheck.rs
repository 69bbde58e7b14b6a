//! Central-finite-difference verification of the crate's analytic
//! gradients.
//!
//! Each check builds a seeded random instance, evaluates a scalar loss
//! `L = <forward(inputs), upstream>`, differentiates it numerically entry
//! by entry, and compares against the analytic vector-Jacobian product.
//! `space_warp` and `raycast` are linear in their features, so central
//! differences through the public f32 ops are exact up to rounding even at
//! large steps; the PointNet check differentiates the f64 forward path that
//! the encoder rounds into its output grid, with a small step that stays
//! inside one piecewise-linear region.

use ndarray::Array5;
use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::features::ImageFeatureMap;
use crate::geometry::{CameraModel, CartesianSpace, Pose, Space};
use crate::grid::Grid;
use crate::pointnet::{
    pointnet_encode, pointnet_vjp, voxel_embeddings, voxelize, PointNetWeights,
};
use crate::points::{LidarPoint, PointCloud};
use crate::raycast::{project_and_gather, raycast, raycast_vjp, Reduction};
use crate::warp::{space_warp, space_warp_vjp};

/// Largest acceptable relative error between analytic and numeric
/// gradients.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

/// Outcome of one gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub op: &'static str,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub entries: usize,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err.is_finite() && self.max_rel_err < self.tolerance
    }
}

/// Maximum entrywise |a - n| normalized by the larger infinity norm of the
/// two gradient vectors. Normalizing per entry would turn float dust on
/// exactly-zero entries into spurious failures.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let scale = analytic
        .iter()
        .chain(numeric.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-12);
    analytic
        .iter()
        .zip(numeric.iter())
        .map(|(a, n)| (a - n).abs() / scale)
        .fold(0.0, f64::max)
}

/// Runs every gradient check with sub-seeds derived from `seed`.
pub fn check_all(seed: u64) -> Result<Vec<GradCheckReport>> {
    Ok(vec![
        check_space_warp(seed)?,
        check_raycast(seed.wrapping_add(1))?,
        check_pointnet(seed.wrapping_add(2))?,
    ])
}

fn uniform01(rng: &mut ChaCha8Rng) -> f32 {
    rng.random_range(0.0..1.0)
}

fn random_grid(rng: &mut ChaCha8Rng, channels: usize, space: &CartesianSpace, pose: &Pose) -> Grid {
    let [z, x, y] = space.dims();
    let data = Array5::from_shape_fn((1, channels, z, x, y), |_| uniform01(rng));
    Grid::new(data, Space::Cartesian(space.clone()), pose.clone()).expect("finite random grid")
}

fn grid_dot(a: &Grid, b: &Grid) -> f64 {
    a.data()
        .iter()
        .zip(b.data().iter())
        .map(|(&x, &y)| x as f64 * y as f64)
        .sum()
}

/// Finite differences of `<space_warp(source), upstream>` against
/// [`space_warp_vjp`]. The warp is linear in the source, so a large step
/// keeps truncation at zero while dwarfing f32 rounding noise.
pub fn check_space_warp(seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let source_space = CartesianSpace::from_counts(
        nalgebra::Vector3::new(0.0, 0.0, 0.0),
        nalgebra::Vector3::new(0.5, 0.5, 0.5),
        [4, 4, 4],
    )?;
    let target_space = CartesianSpace::from_counts(
        nalgebra::Vector3::new(0.15, -0.1, 0.2),
        nalgebra::Vector3::new(0.45, 0.45, 0.45),
        [4, 4, 3],
    )?;
    let source_pose = Pose::identity("vehicle");
    let target_pose = Pose::from_axis_angle(
        nalgebra::Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ),
        rng.random_range(-0.3..0.3),
        nalgebra::Vector3::new(
            rng.random_range(-0.2..0.2),
            rng.random_range(-0.2..0.2),
            rng.random_range(-0.2..0.2),
        ),
        "vehicle",
    );
    let target = Space::Cartesian(target_space);

    let source = random_grid(&mut rng, 2, &source_space, &source_pose);
    let upstream_data = Array5::from_shape_fn(
        {
            let [z, x, y] = target.dims();
            (1, 2, z, x, y)
        },
        |_| uniform01(&mut rng),
    );
    let upstream = Grid::new(upstream_data, target.clone(), target_pose.clone())?;

    let analytic_grid = space_warp_vjp(&source, &target, &target_pose, &upstream)?;
    let analytic: Vec<f64> = analytic_grid.data().iter().map(|&v| v as f64).collect();

    let mut numeric = Vec::with_capacity(analytic.len());
    let base = source.data().clone();
    let eval = |data: Array5<f32>| -> Result<f64> {
        let perturbed = Grid::new(data, source.space().clone(), source.pose().clone())?;
        let out = space_warp(&perturbed, &target, &target_pose)?;
        Ok(grid_dot(&out, &upstream))
    };
    let step = 0.25f64;
    for idx in 0..base.len() {
        let flat = base.as_slice().expect("standard layout");
        let x = flat[idx] as f64;
        let x_plus = (x + step) as f32;
        let x_minus = (x - step) as f32;

        let mut up = base.clone();
        up.as_slice_mut().unwrap()[idx] = x_plus;
        let l_plus = eval(up)?;
        let mut down = base.clone();
        down.as_slice_mut().unwrap()[idx] = x_minus;
        let l_minus = eval(down)?;
        numeric.push((l_plus - l_minus) / (x_plus as f64 - x_minus as f64));
    }

    Ok(GradCheckReport {
        op: "space_warp",
        max_rel_err: relative_error(&analytic, &numeric),
        tolerance: GRADCHECK_TOLERANCE,
        entries: analytic.len(),
    })
}

/// Finite differences of `<raycast(features), upstream>` against
/// [`raycast_vjp`], perturbing every feature-map entry.
pub fn check_raycast(seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = CartesianSpace::from_counts(
        nalgebra::Vector3::new(3.0, -3.0, -1.5),
        nalgebra::Vector3::new(1.5, 1.5, 1.5),
        [4, 4, 2],
    )?;
    let pose = Pose::identity("vehicle");

    let camera_rotation = nalgebra::Matrix3::new(0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0);
    let channels = 2;
    let maps: Vec<ImageFeatureMap> = (0..2)
        .map(|k| {
            let offset = if k == 0 { 0.8 } else { -0.8 };
            let cam_pose = Pose::new(
                camera_rotation,
                nalgebra::Vector3::new(0.0, offset, 0.0),
                "vehicle",
            )
            .expect("orthonormal");
            let camera = CameraModel::new((20.0, 20.0), (11.5, 7.5), (16, 24), cam_pose)
                .expect("valid camera");
            let data =
                ndarray::Array3::from_shape_fn((channels, 16, 24), |_| uniform01(&mut rng));
            ImageFeatureMap::new(data, camera, 1).expect("valid map")
        })
        .collect();

    let (table, _) = project_and_gather(&maps, &space, &pose)?;
    let [z, x, y] = space.dims();
    let upstream_data =
        Array5::from_shape_fn((1, channels + 3, z, x, y), |_| uniform01(&mut rng));
    let upstream = Grid::new(upstream_data, Space::Cartesian(space.clone()), pose.clone())?;

    let analytic_maps = raycast_vjp(&upstream, &table, &maps, Reduction::Mean)?;
    let analytic: Vec<f64> = analytic_maps
        .iter()
        .flat_map(|g| g.iter().map(|&v| v as f64))
        .collect();

    let loss = |maps: &[ImageFeatureMap]| -> Result<f64> {
        let out = raycast(maps, &space, &pose, Reduction::Mean)?;
        Ok(grid_dot(&out, &upstream))
    };

    let step = 0.25f64;
    let mut numeric = Vec::with_capacity(analytic.len());
    for k in 0..maps.len() {
        let base = maps[k].data().clone();
        for idx in 0..base.len() {
            let x = base.as_slice().expect("standard layout")[idx] as f64;
            let x_plus = (x + step) as f32;
            let x_minus = (x - step) as f32;

            let mut up = maps.to_vec();
            let mut data = base.clone();
            data.as_slice_mut().unwrap()[idx] = x_plus;
            up[k] = maps[k].with_data(data);
            let l_plus = loss(&up)?;

            let mut down = maps.to_vec();
            let mut data = base.clone();
            data.as_slice_mut().unwrap()[idx] = x_minus;
            down[k] = maps[k].with_data(data);
            let l_minus = loss(&down)?;

            numeric.push((l_plus - l_minus) / (x_plus as f64 - x_minus as f64));
        }
    }

    Ok(GradCheckReport {
        op: "raycast",
        max_rel_err: relative_error(&analytic, &numeric),
        tolerance: GRADCHECK_TOLERANCE,
        entries: analytic.len(),
    })
}

/// Finite differences over every PointNet weight against [`pointnet_vjp`].
/// The loss reads the f64 per-voxel embeddings; upstream values are f32 so
/// both sides see identical coefficients.
pub fn check_pointnet(seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = CartesianSpace::from_counts(
        nalgebra::Vector3::new(0.0, 0.0, 0.0),
        nalgebra::Vector3::new(1.0, 1.0, 1.0),
        [3, 3, 2],
    )?;
    let pose = Pose::identity("vehicle");
    let coord = Uniform::new(0.0f32, 3.0).expect("valid range");
    let zcoord = Uniform::new(0.0f32, 2.0).expect("valid range");
    let points: Vec<LidarPoint> = (0..18)
        .map(|_| LidarPoint {
            x: coord.sample(&mut rng),
            y: coord.sample(&mut rng),
            z: zcoord.sample(&mut rng),
            intensity: uniform01(&mut rng),
            beam: 0,
            azimuth: 0,
        })
        .collect();
    let cloud = PointCloud::new(points, pose.clone());
    let buckets = voxelize(&cloud, &space, &pose);
    let weights = PointNetWeights::seeded(8, 6, seed ^ 0xABCD);

    let [z, x, y] = space.dims();
    let upstream_data = Array5::from_shape_fn((1, 6, z, x, y), |_| uniform01(&mut rng));
    let upstream = Grid::new(upstream_data, Space::Cartesian(space.clone()), pose.clone())?;

    // Consistency: the grid the pipeline sees is the rounded f64 forward.
    let encoded = pointnet_encode(&buckets, &weights, &space, &pose)?;
    debug_assert_eq!(encoded.channels(), 6);

    let analytic_grads = pointnet_vjp(&upstream, &buckets, &weights)?;
    let analytic: Vec<f64> = analytic_grads
        .w1
        .iter()
        .chain(analytic_grads.b1.iter())
        .chain(analytic_grads.w2.iter())
        .chain(analytic_grads.b2.iter())
        .copied()
        .collect();

    let up = upstream.data();
    let [_, dx, dy] = space.dims();
    let loss = |w: &PointNetWeights| -> f64 {
        voxel_embeddings(&buckets, w)
            .iter()
            .map(|(&voxel_id, emb)| {
                let z = voxel_id / (dx * dy);
                let x = (voxel_id / dy) % dx;
                let y = voxel_id % dy;
                emb.iter()
                    .enumerate()
                    .map(|(c, &e)| e * up[(0, c, z, x, y)] as f64)
                    .sum::<f64>()
            })
            .sum()
    };

    let step = 1e-5f64;
    let flat_len = analytic.len();
    let mut numeric = Vec::with_capacity(flat_len);
    for idx in 0..flat_len {
        let perturb = |delta: f64| -> PointNetWeights {
            let mut w1 = weights.w1().clone();
            let mut b1 = weights.b1().clone();
            let mut w2 = weights.w2().clone();
            let mut b2 = weights.b2().clone();
            let n1 = w1.len();
            let n2 = n1 + b1.len();
            let n3 = n2 + w2.len();
            if idx < n1 {
                w1.as_slice_mut().unwrap()[idx] += delta;
            } else if idx < n2 {
                b1[idx - n1] += delta;
            } else if idx < n3 {
                w2.as_slice_mut().unwrap()[idx - n2] += delta;
            } else {
                b2[idx - n3] += delta;
            }
            PointNetWeights::new(w1, b1, w2, b2).expect("finite perturbed weights")
        };
        let l_plus = loss(&perturb(step));
        let l_minus = loss(&perturb(-step));
        numeric.push((l_plus - l_minus) / (2.0 * step));
    }

    Ok(GradCheckReport {
        op: "pointnet",
        max_rel_err: relative_error(&analytic, &numeric),
        tolerance: GRADCHECK_TOLERANCE,
        entries: flat_len,
    })
}
