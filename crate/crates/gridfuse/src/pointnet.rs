//! Point-cloud voxelization and a small per-point embedding network.
//!
//! Each in-range point is binned into the voxel that physically contains it.
//! Per point the network sees seven inputs — grid-local position, offset to
//! the bucket centroid, and intensity — and applies two affine layers with
//! rectifier nonlinearities. A voxel's embedding is the elementwise max over
//! its points' outputs; empty voxels embed to the zero vector.
//!
//! Weights are f64 and the forward math runs in f64 end to end; the output
//! grid rounds once to f32. Gradients are provided for the weights only,
//! with max-pool ties broken toward the lowest point index so the backward
//! pass is deterministic.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use ndarray::{Array1, Array2, Array5};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{CartesianSpace, Pose, Space};
use crate::grid::Grid;
use crate::points::PointCloud;

/// Per-point network inputs: x, y, z, dx, dy, dz, intensity.
pub const POINT_FEATURE_COUNT: usize = 7;

/// Two affine layers applied per point, both followed by a rectifier.
#[derive(Debug, Clone, PartialEq)]
pub struct PointNetWeights {
    /// (hidden, POINT_FEATURE_COUNT)
    w1: Array2<f64>,
    b1: Array1<f64>,
    /// (embed, hidden)
    w2: Array2<f64>,
    b2: Array1<f64>,
}

impl PointNetWeights {
    pub fn new(
        w1: Array2<f64>,
        b1: Array1<f64>,
        w2: Array2<f64>,
        b2: Array1<f64>,
    ) -> Result<Self> {
        let (hidden, input) = w1.dim();
        let (embed, hidden2) = w2.dim();
        if input != POINT_FEATURE_COUNT
            || b1.len() != hidden
            || hidden2 != hidden
            || b2.len() != embed
        {
            return Err(Error::Mismatch {
                context: "pointnet weights",
                field: "shapes",
            });
        }
        if w1.iter()
            .chain(b1.iter())
            .chain(w2.iter())
            .chain(b2.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("pointnet weights"));
        }
        Ok(Self { w1, b1, w2, b2 })
    }

    /// Draws weights and biases uniformly from
    /// [-1/sqrt(fan_in), +1/sqrt(fan_in)] using a seeded generator, so the
    /// same seed always yields the same network.
    pub fn seeded(hidden: usize, embed: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layer = |rows: usize, cols: usize| {
            let bound = 1.0 / (cols as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound).expect("valid range");
            let w = Array2::from_shape_fn((rows, cols), |_| dist.sample(&mut rng));
            let b = Array1::from_shape_fn(rows, |_| dist.sample(&mut rng));
            (w, b)
        };
        let (w1, b1) = layer(hidden, POINT_FEATURE_COUNT);
        let (w2, b2) = layer(embed, hidden);
        Self { w1, b1, w2, b2 }
    }

    pub fn hidden(&self) -> usize {
        self.w1.dim().0
    }

    pub fn embed(&self) -> usize {
        self.w2.dim().0
    }

    pub fn w1(&self) -> &Array2<f64> {
        &self.w1
    }

    pub fn b1(&self) -> &Array1<f64> {
        &self.b1
    }

    pub fn w2(&self) -> &Array2<f64> {
        &self.w2
    }

    pub fn b2(&self) -> &Array1<f64> {
        &self.b2
    }
}

/// Weight-space gradients produced by [`pointnet_vjp`].
#[derive(Debug, Clone, PartialEq)]
pub struct PointNetGradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl PointNetGradients {
    fn zeros_like(weights: &PointNetWeights) -> Self {
        Self {
            w1: Array2::zeros(weights.w1.dim()),
            b1: Array1::zeros(weights.b1.len()),
            w2: Array2::zeros(weights.w2.dim()),
            b2: Array1::zeros(weights.b2.len()),
        }
    }
}

/// A point assigned to a voxel: original cloud index, grid-local position,
/// and intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BucketPoint {
    pub point_index: usize,
    pub local: Vector3<f64>,
    pub intensity: f64,
}

/// Per-voxel point buckets over a grid lattice, keyed by flat voxel id.
/// Points within a bucket keep their input order.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelBuckets {
    dims: [usize; 3],
    buckets: BTreeMap<usize, Vec<BucketPoint>>,
}

impl VoxelBuckets {
    /// Lattice dims (z, x, y) the buckets were built over.
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn num_voxels(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// Occupied voxel count.
    pub fn occupied(&self) -> usize {
        self.buckets.len()
    }

    pub fn bucket(&self, voxel_id: usize) -> Option<&[BucketPoint]> {
        self.buckets.get(&voxel_id).map(|v| v.as_slice())
    }

    /// Iterates occupied voxels in ascending voxel-id order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &[BucketPoint])> {
        self.buckets.iter().map(|(&id, pts)| (id, pts.as_slice()))
    }
}

/// Assigns each in-range point to the voxel physically containing it
/// (out-of-range points are dropped). Positions are expressed in the grid's
/// local frame: reference frame via the cloud pose, then grid-local via the
/// inverse grid pose.
pub fn voxelize(cloud: &PointCloud, space: &CartesianSpace, pose: &Pose) -> VoxelBuckets {
    let to_reference = &cloud.pose;
    let to_local = pose.inverse();
    let mut buckets: BTreeMap<usize, Vec<BucketPoint>> = BTreeMap::new();
    for (point_index, p) in cloud.points.iter().enumerate() {
        let local = to_local.apply(&to_reference.apply(&p.position()));
        if let Some(idx) = space.voxel_containing(&local) {
            buckets.entry(space.flat_index(idx)).or_default().push(BucketPoint {
                point_index,
                local,
                intensity: p.intensity as f64,
            });
        }
    }
    VoxelBuckets {
        dims: space.dims(),
        buckets,
    }
}

/// Per-point inputs for one bucket: position, offset to the bucket centroid
/// (arithmetic mean of the bucket's points), intensity.
fn bucket_features(points: &[BucketPoint]) -> Vec<[f64; POINT_FEATURE_COUNT]> {
    let mut centroid = Vector3::zeros();
    for p in points {
        centroid += p.local;
    }
    centroid /= points.len() as f64;
    points
        .iter()
        .map(|p| {
            [
                p.local.x,
                p.local.y,
                p.local.z,
                p.local.x - centroid.x,
                p.local.y - centroid.y,
                p.local.z - centroid.z,
                p.intensity,
            ]
        })
        .collect()
}

struct PointActivations {
    z1: Vec<f64>,
    h: Vec<f64>,
    z2: Vec<f64>,
    e: Vec<f64>,
}

fn point_forward(weights: &PointNetWeights, f: &[f64; POINT_FEATURE_COUNT]) -> PointActivations {
    let hidden = weights.hidden();
    let embed = weights.embed();
    let mut z1 = vec![0.0; hidden];
    let mut h = vec![0.0; hidden];
    for j in 0..hidden {
        let mut acc = weights.b1[j];
        for k in 0..POINT_FEATURE_COUNT {
            acc += weights.w1[(j, k)] * f[k];
        }
        z1[j] = acc;
        h[j] = acc.max(0.0);
    }
    let mut z2 = vec![0.0; embed];
    let mut e = vec![0.0; embed];
    for c in 0..embed {
        let mut acc = weights.b2[c];
        for j in 0..hidden {
            acc += weights.w2[(c, j)] * h[j];
        }
        z2[c] = acc;
        e[c] = acc.max(0.0);
    }
    PointActivations { z1, h, z2, e }
}

/// Per-voxel embeddings in f64: the elementwise max over each bucket's
/// per-point network outputs. This is the function [`pointnet_encode`]
/// rounds into its output grid and the one gradients are checked against.
pub fn voxel_embeddings(
    buckets: &VoxelBuckets,
    weights: &PointNetWeights,
) -> BTreeMap<usize, Vec<f64>> {
    let embed = weights.embed();
    let mut out = BTreeMap::new();
    for (voxel_id, points) in buckets.iter() {
        let features = bucket_features(points);
        let mut best = vec![f64::NEG_INFINITY; embed];
        for f in &features {
            let acts = point_forward(weights, f);
            for c in 0..embed {
                if acts.e[c] > best[c] {
                    best[c] = acts.e[c];
                }
            }
        }
        out.insert(voxel_id, best);
    }
    out
}

/// Encodes buckets into a (1, embed, Z, X, Y) grid; empty voxels are zero.
pub fn pointnet_encode(
    buckets: &VoxelBuckets,
    weights: &PointNetWeights,
    space: &CartesianSpace,
    pose: &Pose,
) -> Result<Grid> {
    if buckets.dims() != space.dims() {
        return Err(Error::Mismatch {
            context: "pointnet_encode",
            field: "dims",
        });
    }
    let [dz, dx, dy] = space.dims();
    let embed = weights.embed();
    let mut data = Array5::zeros((1, embed, dz, dx, dy));
    for (voxel_id, emb) in voxel_embeddings(buckets, weights) {
        let z = voxel_id / (dx * dy);
        let x = (voxel_id / dy) % dx;
        let y = voxel_id % dy;
        for c in 0..embed {
            data[(0, c, z, x, y)] = emb[c] as f32;
        }
    }
    Ok(Grid::from_parts(
        data,
        Space::Cartesian(space.clone()),
        pose.clone(),
    ))
}

/// Backpropagates an upstream grid-shaped gradient to the weights.
///
/// Max-pool routes each channel's gradient to that channel's arg-max point
/// (ties to the lowest point index); both rectifiers pass gradient only
/// where their pre-activation is strictly positive.
pub fn pointnet_vjp(
    upstream: &Grid,
    buckets: &VoxelBuckets,
    weights: &PointNetWeights,
) -> Result<PointNetGradients> {
    let embed = weights.embed();
    let hidden = weights.hidden();
    if upstream.channels() != embed || upstream.batch() != 1 {
        return Err(Error::Mismatch {
            context: "pointnet_vjp",
            field: "channels",
        });
    }
    if upstream.dims() != buckets.dims() {
        return Err(Error::Mismatch {
            context: "pointnet_vjp",
            field: "dims",
        });
    }
    let [_, dx, dy] = buckets.dims();
    let up = upstream.data();
    let mut grads = PointNetGradients::zeros_like(weights);

    for (voxel_id, points) in buckets.iter() {
        let z = voxel_id / (dx * dy);
        let x = (voxel_id / dy) % dx;
        let y = voxel_id % dy;

        let features = bucket_features(points);
        let acts: Vec<PointActivations> = features
            .iter()
            .map(|f| point_forward(weights, f))
            .collect();

        // dL/dh per point, accumulated over the channels that point wins.
        let mut dh = vec![vec![0.0f64; hidden]; points.len()];
        for c in 0..embed {
            let g = up[(0, c, z, x, y)] as f64;
            if g == 0.0 {
                continue;
            }
            let mut winner = 0usize;
            for (p, a) in acts.iter().enumerate() {
                if a.e[c] > acts[winner].e[c] {
                    winner = p;
                }
            }
            if acts[winner].z2[c] <= 0.0 {
                continue;
            }
            grads.b2[c] += g;
            for j in 0..hidden {
                grads.w2[(c, j)] += g * acts[winner].h[j];
                dh[winner][j] += g * weights.w2[(c, j)];
            }
        }

        for (p, dh_p) in dh.iter().enumerate() {
            for j in 0..hidden {
                if dh_p[j] == 0.0 || acts[p].z1[j] <= 0.0 {
                    continue;
                }
                grads.b1[j] += dh_p[j];
                for k in 0..POINT_FEATURE_COUNT {
                    grads.w1[(j, k)] += dh_p[j] * features[p][k];
                }
            }
        }
    }
    Ok(grads)
}
