//! Brute-force oracle equivalence for the encoders.
//!
//! The raycast oracle below is the definitionally simple implementation: a
//! per-voxel, per-camera loop with no pair table. The two-phase pipeline
//! must match it bit for bit. Voxelization and occupancy are checked the
//! same way against per-point containment loops.

mod common;

use common::*;
use gridfuse::features::ImageFeatureMap;
use gridfuse::fusion::occupancy_ground_truth;
use gridfuse::geometry::{CartesianSpace, Pose};
use gridfuse::grid::Grid;
use gridfuse::pointnet::{pointnet_encode, voxelize, PointNetWeights};
use gridfuse::points::{LidarPoint, PointCloud};
use gridfuse::raycast::{project_and_gather, raycast, Reduction};
use nalgebra::Vector3;
use ndarray::Array5;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Space in front of the origin so ring cameras can see it.
fn scene_space(rng: &mut ChaCha8Rng) -> CartesianSpace {
    let cell = rng.random_range(0.8..1.6);
    CartesianSpace::from_counts(
        Vector3::new(
            rng.random_range(3.0..5.0),
            rng.random_range(-4.0..-2.0),
            rng.random_range(-2.0..-1.0),
        ),
        Vector3::new(cell, cell, cell),
        [
            rng.random_range(3..=8),
            rng.random_range(3..=8),
            rng.random_range(2..=4),
        ],
    )
    .expect("scene space is well formed")
}

fn scene_cameras(rng: &mut ChaCha8Rng, count: usize, channels: usize) -> Vec<ImageFeatureMap> {
    (0..count)
        .map(|k| {
            let yaw = rng.random_range(-0.4..0.4) + k as f64 * 0.15;
            let position = Vector3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-1.5..1.5),
                rng.random_range(-0.5..0.5),
            );
            let stride = if rng.random_bool(0.5) { 1 } else { 2 };
            random_feature_map(rng, channels, (24, 32), stride, position, yaw)
        })
        .collect()
}

/// The straightforward uplift: loop voxels, loop cameras, project, gather,
/// mean, then append coordinate channels.
fn brute_force_raycast(
    features: &[ImageFeatureMap],
    space: &CartesianSpace,
    pose: &Pose,
) -> Grid {
    let channels = features[0].channels();
    let [dz, dx, dy] = space.dims();
    let mut data = Array5::zeros((1, channels + 3, dz, dx, dy));
    for z in 0..dz {
        for x in 0..dx {
            for y in 0..dy {
                let local = space.grid_to_world([z as f64, x as f64, y as f64]);
                let world = pose.apply(&local);
                let mut acc = vec![0.0f64; channels];
                let mut count = 0u32;
                for map in features {
                    let proj = map.camera().project(&world);
                    if !proj.valid {
                        continue;
                    }
                    let stride = map.stride() as f64;
                    let fu = (proj.u / stride).round();
                    let fv = (proj.v / stride).round();
                    let (frows, fcols) = map.feature_dims();
                    if fu < 0.0
                        || fu > fcols as f64 - 1.0
                        || fv < 0.0
                        || fv > frows as f64 - 1.0
                    {
                        continue;
                    }
                    count += 1;
                    for c in 0..channels {
                        acc[c] += map.data()[(c, fv as usize, fu as usize)] as f64;
                    }
                }
                if count > 0 {
                    for c in 0..channels {
                        data[(0, c, z, x, y)] = (acc[c] / count as f64) as f32;
                    }
                }
                data[(0, channels, z, x, y)] = world.x as f32;
                data[(0, channels + 1, z, x, y)] = world.y as f32;
                data[(0, channels + 2, z, x, y)] = world.z as f32;
            }
        }
    }
    Grid::new(data, gridfuse::geometry::Space::Cartesian(space.clone()), pose.clone()).unwrap()
}

/// Count of cameras whose image contains the voxel centroid.
fn brute_force_visibility(
    features: &[ImageFeatureMap],
    space: &CartesianSpace,
    pose: &Pose,
    voxel: [usize; 3],
) -> usize {
    let local = space.grid_to_world([voxel[0] as f64, voxel[1] as f64, voxel[2] as f64]);
    let world = pose.apply(&local);
    features
        .iter()
        .filter(|map| {
            let proj = map.camera().project(&world);
            if !proj.valid {
                return false;
            }
            let stride = map.stride() as f64;
            let fu = (proj.u / stride).round();
            let fv = (proj.v / stride).round();
            let (frows, fcols) = map.feature_dims();
            fu >= 0.0 && fu <= fcols as f64 - 1.0 && fv >= 0.0 && fv <= frows as f64 - 1.0
        })
        .count()
}

#[test]
fn two_phase_raycast_matches_brute_force_bit_exactly() {
    let mut rng = rng(11);
    for trial in 0..50 {
        let space = scene_space(&mut rng);
        let pose = random_pose(&mut rng, 0.2, 0.5);
        let channels = rng.random_range(1..=4);
        let cameras = rng.random_range(1..=4);
        let maps = scene_cameras(&mut rng, cameras, channels);

        let fast = raycast(&maps, &space, &pose, Reduction::Mean).unwrap();
        let slow = brute_force_raycast(&maps, &space, &pose);
        assert_eq!(
            fast.data(),
            slow.data(),
            "trial {trial}: two-phase and brute-force grids differ"
        );
    }
}

#[test]
fn pair_table_counts_match_brute_force_visibility() {
    let mut rng = rng(22);
    for trial in 0..20 {
        let space = scene_space(&mut rng);
        let pose = random_pose(&mut rng, 0.2, 0.5);
        let cameras = rng.random_range(2..=4);
        let maps = scene_cameras(&mut rng, cameras, 2);

        let (table, _) = project_and_gather(&maps, &space, &pose).unwrap();
        let [dz, dx, dy] = space.dims();
        for z in 0..dz {
            for x in 0..dx {
                for y in 0..dy {
                    let id = space.flat_index([z, x, y]);
                    let expected = brute_force_visibility(&maps, &space, &pose, [z, x, y]);
                    assert_eq!(
                        table.rows_for_voxel(id),
                        expected,
                        "trial {trial} voxel ({z},{x},{y})"
                    );
                }
            }
        }
    }
}

#[test]
fn camera_permutation_leaves_mean_raycast_unchanged() {
    let mut rng = rng(33);
    for _ in 0..10 {
        let space = scene_space(&mut rng);
        let pose = Pose::identity("vehicle");
        let mut maps = scene_cameras(&mut rng, 3, 2);
        let base = raycast(&maps, &space, &pose, Reduction::Mean).unwrap();
        maps.shuffle(&mut rng);
        let shuffled = raycast(&maps, &space, &pose, Reduction::Mean).unwrap();
        let err = max_abs_diff(&base, &shuffled);
        assert!(err < 1e-6, "permutation changed the grid by {err}");
    }
}

#[test]
fn raycast_is_linear_in_features() {
    let mut rng = rng(44);
    let space = scene_space(&mut rng);
    let pose = Pose::identity("vehicle");
    let maps = scene_cameras(&mut rng, 2, 3);
    let alpha = 2.5f32;
    let scaled: Vec<ImageFeatureMap> = maps
        .iter()
        .map(|m| {
            ImageFeatureMap::new(m.data().mapv(|v| alpha * v), m.camera().clone(), m.stride())
                .unwrap()
        })
        .collect();

    let base = raycast(&maps, &space, &pose, Reduction::Mean).unwrap();
    let scaled_out = raycast(&scaled, &space, &pose, Reduction::Mean).unwrap();

    let channels = 3;
    for (idx, (&b, &s)) in base
        .data()
        .iter()
        .zip(scaled_out.data().iter())
        .enumerate()
    {
        let c = (idx / (base.dims()[0] * base.dims()[1] * base.dims()[2])) % base.channels();
        if c < channels {
            assert!(
                (s as f64 - alpha as f64 * b as f64).abs() < 1e-5,
                "feature channel scaled incorrectly"
            );
        } else {
            assert_eq!(s, b, "coordinate channel must not scale");
        }
    }
}

#[test]
fn raycast_runs_are_bit_identical() {
    let mut rng = rng(55);
    let space = scene_space(&mut rng);
    let pose = random_pose(&mut rng, 0.2, 0.3);
    let maps = scene_cameras(&mut rng, 3, 2);
    let a = raycast(&maps, &space, &pose, Reduction::Mean).unwrap();
    let b = raycast(&maps, &space, &pose, Reduction::Mean).unwrap();
    assert_eq!(a.data(), b.data());
}

fn random_cloud(rng: &mut ChaCha8Rng, count: usize, extent: f64) -> Vec<LidarPoint> {
    (0..count)
        .map(|_| LidarPoint {
            x: rng.random_range(-extent..extent) as f32,
            y: rng.random_range(-extent..extent) as f32,
            z: rng.random_range(-extent / 2.0..extent / 2.0) as f32,
            intensity: rng.random_range(0.0f32..1.0),
            beam: rng.random_range(0..64),
            azimuth: rng.random_range(0..1800),
        })
        .collect()
}

#[test]
fn voxelize_matches_per_point_containment_loop() {
    let mut rng = rng(66);
    let space = CartesianSpace::from_counts(
        Vector3::new(-4.0, -4.0, -2.0),
        Vector3::new(0.8, 0.8, 0.8),
        [10, 10, 5],
    )
    .unwrap();
    let pose = random_pose(&mut rng, 0.3, 1.0);
    let cloud_pose = random_pose(&mut rng, 0.3, 1.0);
    let points = random_cloud(&mut rng, 1000, 6.0);
    let cloud = PointCloud::new(points.clone(), cloud_pose.clone());

    let buckets = voxelize(&cloud, &space, &pose);

    // Independent containment loop straight from the lattice definition.
    let to_local = pose.inverse();
    let mut expected: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, p) in points.iter().enumerate() {
        let local = to_local.apply(&cloud_pose.apply(&p.position()));
        let min = space.min_corner();
        let cell = space.cell_size();
        let fx = ((local.x - min.x) / cell.x).floor();
        let fy = ((local.y - min.y) / cell.y).floor();
        let fz = ((local.z - min.z) / cell.z).floor();
        let [dz, dx, dy] = space.dims();
        // The containment rule closes the far boundary; random points never
        // land there exactly, so plain floor suffices for the oracle.
        if fx < 0.0
            || fx >= dx as f64
            || fy < 0.0
            || fy >= dy as f64
            || fz < 0.0
            || fz >= dz as f64
        {
            continue;
        }
        let id = (fz as usize * dx + fx as usize) * dy + fy as usize;
        expected.entry(id).or_default().push(i);
    }

    assert_eq!(buckets.occupied(), expected.len());
    for (id, indices) in &expected {
        let bucket = buckets.bucket(*id).unwrap();
        let got: Vec<usize> = bucket.iter().map(|b| b.point_index).collect();
        assert_eq!(&got, indices, "voxel {id}");
    }
}

#[test]
fn occupancy_matches_brute_force_on_random_clouds() {
    let mut rng = rng(77);
    let space = CartesianSpace::from_counts(
        Vector3::new(-3.0, -3.0, -1.0),
        Vector3::new(0.6, 0.6, 0.5),
        [10, 10, 4],
    )
    .unwrap();
    for trial in 0..100 {
        let pose = random_pose(&mut rng, 0.2, 0.5);
        let count = rng.random_range(0..=500);
        let cloud = PointCloud::new(random_cloud(&mut rng, count, 4.0), pose.clone());
        let grid_pose = Pose::identity("vehicle");
        let gt = occupancy_ground_truth(&cloud, &space, &grid_pose);

        let buckets = voxelize(&cloud, &space, &grid_pose);
        let [dz, dx, dy] = space.dims();
        for z in 0..dz {
            for x in 0..dx {
                for y in 0..dy {
                    let id = space.flat_index([z, x, y]);
                    let expected = if buckets.bucket(id).is_some() { 1.0 } else { 0.0 };
                    assert_eq!(
                        gt.data()[(0, 0, z, x, y)],
                        expected,
                        "trial {trial} voxel ({z},{x},{y})"
                    );
                }
            }
        }
    }
}

#[test]
fn pointnet_is_invariant_to_point_order_within_voxels() {
    let mut rng = rng(88);
    let space = CartesianSpace::from_counts(
        Vector3::new(0.0, 0.0, 0.0),
        Vector3::new(2.0, 2.0, 2.0),
        [2, 2, 1],
    )
    .unwrap();
    let pose = Pose::identity("vehicle");
    let weights = PointNetWeights::seeded(8, 6, 5);
    for _ in 0..20 {
        let mut points = random_cloud(&mut rng, 40, 2.0);
        for p in &mut points {
            p.x = p.x.abs();
            p.y = p.y.abs();
            p.z = p.z.abs();
        }
        let base = pointnet_encode(
            &voxelize(&PointCloud::new(points.clone(), pose.clone()), &space, &pose),
            &weights,
            &space,
            &pose,
        )
        .unwrap();
        points.shuffle(&mut rng);
        let shuffled = pointnet_encode(
            &voxelize(&PointCloud::new(points, pose.clone()), &space, &pose),
            &weights,
            &space,
            &pose,
        )
        .unwrap();
        assert_eq!(base.data(), shuffled.data());
    }
}

#[test]
fn adding_a_centroid_point_never_decreases_any_channel() {
    // Adding a point at a bucket's positional centroid leaves every
    // existing point's features unchanged (the centroid is a fixed point
    // of its own mean), so the per-voxel elementwise max can only grow.
    let mut rng = rng(99);
    let space = CartesianSpace::from_counts(
        Vector3::new(0.0, 0.0, 0.0),
        Vector3::new(2.0, 2.0, 2.0),
        [2, 2, 1],
    )
    .unwrap();
    let pose = Pose::identity("vehicle");
    let weights = PointNetWeights::seeded(8, 6, 5);
    for trial in 0..20 {
        let mut points = random_cloud(&mut rng, 12, 1.9);
        for p in &mut points {
            p.x = p.x.abs().min(1.9);
            p.y = p.y.abs().min(1.9);
            p.z = p.z.abs().min(1.9);
        }
        let cloud = PointCloud::new(points.clone(), pose.clone());
        let buckets = voxelize(&cloud, &space, &pose);
        let (_, bucket) = buckets.iter().next().expect("at least one bucket");
        let mut centroid = Vector3::zeros();
        for p in bucket {
            centroid += p.local;
        }
        centroid /= bucket.len() as f64;

        let base = pointnet_encode(&buckets, &weights, &space, &pose).unwrap();
        points.push(LidarPoint {
            x: centroid.x as f32,
            y: centroid.y as f32,
            z: centroid.z as f32,
            intensity: rng.random_range(0.0f32..1.0),
            beam: 0,
            azimuth: 0,
        });
        let grown = pointnet_encode(
            &voxelize(&PointCloud::new(points, pose.clone()), &space, &pose),
            &weights,
            &space,
            &pose,
        )
        .unwrap();
        // f32 rounding of the centroid can move it by one ulp; allow that
        // much slack in the comparison.
        for (&b, &g) in base.data().iter().zip(grown.data().iter()) {
            assert!(
                g >= b - 1e-5,
                "trial {trial}: channel decreased from {b} to {g}"
            );
        }
    }
}
