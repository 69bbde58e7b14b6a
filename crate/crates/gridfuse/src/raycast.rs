//! Camera-to-voxel feature uplift.
//!
//! The operation runs in two phases. Project-and-gather projects the
//! centroid of every target voxel onto every camera that sees it, records
//! the valid (voxel id, camera index, u, v) pairs, and gathers one feature
//! row per pair. The reduction phase scatter-reduces the gathered rows per
//! voxel id (mean by default, sum by configuration); voxel ids absent from
//! the table reduce to a zero vector. The reduced rows are reshaped into a
//! grid and the voxel centers' Cartesian coordinates are concatenated as
//! three extra channels, so voxels sharing a camera ray still produce
//! distinct feature vectors.
//!
//! Projection uses full-resolution intrinsics; the gathered pixel is the
//! nearest feature-map cell at (round(v/stride), round(u/stride)), and a
//! voxel whose projection rounds off the feature map (the half-pixel margin
//! at image edges) is invalid for that camera.

use ndarray::{Array2, Array3, Array5};

use crate::error::{Error, Result};
use crate::features::ImageFeatureMap;
use crate::geometry::{CartesianSpace, Pose, Space};
use crate::grid::{concat_channels, coordinate_grid, Grid};

/// One valid voxel-camera pairing with its full-resolution pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEntry {
    /// Flat voxel id, row-major over (z, x, y) with y fastest.
    pub voxel_id: usize,
    pub camera_index: usize,
    /// Column coordinate, full-resolution pixels.
    pub u: f64,
    /// Row coordinate, full-resolution pixels.
    pub v: f64,
}

/// Valid (voxel, camera) pairs sorted by (voxel_id, camera_index).
///
/// Each voxel id appears between zero times (not seen by any camera) and
/// once per camera (inside every field of view).
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelCameraPairTable {
    entries: Vec<PairEntry>,
}

impl VoxelCameraPairTable {
    pub fn entries(&self) -> &[PairEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of table rows for one voxel id.
    pub fn rows_for_voxel(&self, voxel_id: usize) -> usize {
        let start = self.entries.partition_point(|e| e.voxel_id < voxel_id);
        self.entries[start..]
            .iter()
            .take_while(|e| e.voxel_id == voxel_id)
            .count()
    }
}

/// How gathered feature rows are reduced per voxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Arithmetic mean; feature magnitude independent of how many cameras
    /// observe a voxel.
    #[default]
    Mean,
    Sum,
}

/// Phase one: projects voxel centroids onto every camera, keeps the valid
/// pairs, and gathers one feature row per pair.
///
/// Returns the sorted pair table and a (valid pairs, C) matrix of gathered
/// features. All feature maps must share their channel count.
pub fn project_and_gather(
    features: &[ImageFeatureMap],
    space: &CartesianSpace,
    pose: &Pose,
) -> Result<(VoxelCameraPairTable, Array2<f32>)> {
    if features.is_empty() {
        return Err(Error::invalid("camera list", "at least one camera required"));
    }
    let channels = features[0].channels();
    if features.iter().any(|f| f.channels() != channels) {
        return Err(Error::Mismatch {
            context: "project_and_gather",
            field: "channels",
        });
    }

    struct CameraCtx<'a> {
        map: &'a ImageFeatureMap,
        inverse_pose: Pose,
        frows: usize,
        fcols: usize,
    }
    let cams: Vec<CameraCtx> = features
        .iter()
        .map(|map| {
            let (frows, fcols) = map.feature_dims();
            CameraCtx {
                map,
                inverse_pose: map.camera().pose().inverse(),
                frows,
                fcols,
            }
        })
        .collect();

    let [dz, dx, dy] = space.dims();
    let mut entries = Vec::new();
    let mut rows: Vec<f32> = Vec::new();

    let mut voxel_id = 0usize;
    for z in 0..dz {
        for x in 0..dx {
            for y in 0..dy {
                let local = space.grid_to_world([z as f64, x as f64, y as f64]);
                let world = pose.apply(&local);
                for (camera_index, cam) in cams.iter().enumerate() {
                    let p_cam = cam.inverse_pose.apply(&world);
                    let proj = cam.map.camera().project_camera_frame(&p_cam);
                    if !proj.valid {
                        continue;
                    }
                    let stride = cam.map.stride() as f64;
                    let fu = (proj.u / stride).round();
                    let fv = (proj.v / stride).round();
                    if fu < 0.0
                        || fu > cam.fcols as f64 - 1.0
                        || fv < 0.0
                        || fv > cam.frows as f64 - 1.0
                    {
                        continue;
                    }
                    entries.push(PairEntry {
                        voxel_id,
                        camera_index,
                        u: proj.u,
                        v: proj.v,
                    });
                    let (fu, fv) = (fu as usize, fv as usize);
                    let data = cam.map.data();
                    for c in 0..channels {
                        rows.push(data[(c, fv, fu)]);
                    }
                }
                voxel_id += 1;
            }
        }
    }

    let gathered = Array2::from_shape_vec((entries.len(), channels), rows)
        .expect("row count matches entries");
    Ok((VoxelCameraPairTable { entries }, gathered))
}

/// Phase two: reduces gathered rows per voxel id into a (num voxels, C)
/// matrix. Absent voxel ids reduce to the zero vector. Accumulation runs
/// in table order, so repeated calls are bit-identical.
pub fn scatter_reduce(
    table: &VoxelCameraPairTable,
    gathered: &Array2<f32>,
    space: &CartesianSpace,
    reduction: Reduction,
) -> Result<Array2<f32>> {
    let (rows, channels) = gathered.dim();
    if rows != table.len() {
        return Err(Error::Mismatch {
            context: "scatter_reduce",
            field: "rows",
        });
    }
    let num_voxels = space.num_voxels();
    let mut acc = vec![0.0f64; num_voxels * channels];
    let mut counts = vec![0u32; num_voxels];
    for (row, entry) in table.entries.iter().enumerate() {
        if entry.voxel_id >= num_voxels {
            return Err(Error::VoxelIdRange {
                id: entry.voxel_id,
                num_voxels,
            });
        }
        counts[entry.voxel_id] += 1;
        let base = entry.voxel_id * channels;
        for c in 0..channels {
            acc[base + c] += gathered[(row, c)] as f64;
        }
    }
    let mut out = Array2::zeros((num_voxels, channels));
    for v in 0..num_voxels {
        if counts[v] == 0 {
            continue;
        }
        let scale = match reduction {
            Reduction::Mean => 1.0 / counts[v] as f64,
            Reduction::Sum => 1.0,
        };
        for c in 0..channels {
            out[(v, c)] = (acc[v * channels + c] * scale) as f32;
        }
    }
    Ok(out)
}

/// Full uplift: project-and-gather, scatter-reduce, reshape to a grid, and
/// concatenate the (x, y, z) voxel-center coordinate channels.
///
/// The output grid has `C + 3` channels (features first) and is bound to
/// (`space`, `pose`).
pub fn raycast(
    features: &[ImageFeatureMap],
    space: &CartesianSpace,
    pose: &Pose,
    reduction: Reduction,
) -> Result<Grid> {
    let (table, gathered) = project_and_gather(features, space, pose)?;
    let reduced = scatter_reduce(&table, &gathered, space, reduction)?;
    let grid = reduced_to_grid(&reduced, space, pose);
    let coords = coordinate_grid(space, pose);
    concat_channels(&grid, &coords)
}

/// Reshapes a (num voxels, C) reduction into a (1, C, Z, X, Y) grid.
pub fn reduced_to_grid(reduced: &Array2<f32>, space: &CartesianSpace, pose: &Pose) -> Grid {
    let [dz, dx, dy] = space.dims();
    let channels = reduced.dim().1;
    let data = Array5::from_shape_fn((1, channels, dz, dx, dy), |(_, c, z, x, y)| {
        reduced[((z * dx + x) * dy + y, c)]
    });
    Grid::from_parts(data, Space::Cartesian(space.clone()), pose.clone())
}

/// Adjoint of the gather-and-reduce map: routes upstream feature-channel
/// gradients back onto each feature map's sampled pixels. The three
/// coordinate channels receive no gradient. Accumulation runs in table
/// order, so repeated calls are bit-identical.
pub fn raycast_vjp(
    upstream: &Grid,
    table: &VoxelCameraPairTable,
    features: &[ImageFeatureMap],
    reduction: Reduction,
) -> Result<Vec<Array3<f32>>> {
    if features.is_empty() {
        return Err(Error::invalid("camera list", "at least one camera required"));
    }
    let channels = features[0].channels();
    if upstream.channels() != channels + 3 || upstream.batch() != 1 {
        return Err(Error::Mismatch {
            context: "raycast_vjp",
            field: "channels",
        });
    }
    let [dz, dx, dy] = upstream.dims();
    let num_voxels = dz * dx * dy;

    let mut counts = vec![0u32; num_voxels];
    for entry in &table.entries {
        if entry.voxel_id >= num_voxels {
            return Err(Error::VoxelIdRange {
                id: entry.voxel_id,
                num_voxels,
            });
        }
        counts[entry.voxel_id] += 1;
    }

    let mut grads: Vec<Array3<f64>> = features
        .iter()
        .map(|f| {
            let (frows, fcols) = f.feature_dims();
            Array3::zeros((channels, frows, fcols))
        })
        .collect();

    let up = upstream.data();
    for entry in &table.entries {
        let v = entry.voxel_id;
        let z = v / (dx * dy);
        let x = (v / dy) % dx;
        let y = v % dy;
        let scale = match reduction {
            Reduction::Mean => 1.0 / counts[v] as f64,
            Reduction::Sum => 1.0,
        };
        let map = &features[entry.camera_index];
        let stride = map.stride() as f64;
        let fu = (entry.u / stride).round() as usize;
        let fv = (entry.v / stride).round() as usize;
        let g = &mut grads[entry.camera_index];
        for c in 0..channels {
            g[(c, fv, fu)] += up[(0, c, z, x, y)] as f64 * scale;
        }
    }

    Ok(grads
        .into_iter()
        .map(|g| g.mapv(|v| v as f32))
        .collect())
}
