use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::camera::{CameraModel, EPS_DEPTH};

/// Axis-aligned voxel lattice over a box extent.
///
/// World coordinates are (x, y, z); grid indices are ordered (z, x, y) to
/// match the (N, C, Z, X, Y) tensor layout used by [`crate::grid::Grid`].
/// Voxel `i` along an axis is centered at `min + (i + 0.5) * cell`, so
/// centers are strictly interior to the extent.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianSpace {
    min_corner: Vector3<f64>,
    max_corner: Vector3<f64>,
    cell_size: Vector3<f64>,
    /// Voxel counts ordered (z, x, y).
    dims: [usize; 3],
}

impl CartesianSpace {
    /// Builds a voxel lattice from an extent and a cell size (both in world
    /// (x, y, z) order, meters). Voxel counts are the rounded extent/cell
    /// ratio per axis and must reconstruct the extent within 1e-6 m.
    pub fn new(
        min_corner: Vector3<f64>,
        max_corner: Vector3<f64>,
        cell_size: Vector3<f64>,
    ) -> Result<Self> {
        for v in min_corner.iter().chain(max_corner.iter()).chain(cell_size.iter()) {
            if !v.is_finite() {
                return Err(Error::NonFinite("cartesian space"));
            }
        }
        if cell_size.iter().any(|&c| c <= 0.0) {
            return Err(Error::invalid(
                "cell size",
                format!("{:?} has a non-positive component", cell_size),
            ));
        }
        let mut counts = [0usize; 3];
        for axis in 0..3 {
            let extent = max_corner[axis] - min_corner[axis];
            let n = (extent / cell_size[axis]).round();
            if n < 1.0 {
                return Err(Error::invalid(
                    "space extent",
                    format!("axis {axis} spans less than one cell"),
                ));
            }
            if (n * cell_size[axis] - extent).abs() > 1e-6 {
                return Err(Error::invalid(
                    "space extent",
                    format!(
                        "axis {axis}: {n} cells of {} do not reconstruct extent {extent} within 1e-6",
                        cell_size[axis]
                    ),
                ));
            }
            counts[axis] = n as usize;
        }
        Ok(Self {
            min_corner,
            max_corner,
            cell_size,
            // counts is (x, y, z); store (z, x, y).
            dims: [counts[2], counts[0], counts[1]],
        })
    }

    /// Builds a lattice from a min corner, cell size, and per-axis voxel
    /// counts in world (x, y, z) order; the max corner follows.
    pub fn from_counts(
        min_corner: Vector3<f64>,
        cell_size: Vector3<f64>,
        counts_xyz: [usize; 3],
    ) -> Result<Self> {
        let max_corner = Vector3::new(
            min_corner.x + counts_xyz[0] as f64 * cell_size.x,
            min_corner.y + counts_xyz[1] as f64 * cell_size.y,
            min_corner.z + counts_xyz[2] as f64 * cell_size.z,
        );
        Self::new(min_corner, max_corner, cell_size)
    }

    pub fn min_corner(&self) -> &Vector3<f64> {
        &self.min_corner
    }

    pub fn max_corner(&self) -> &Vector3<f64> {
        &self.max_corner
    }

    pub fn cell_size(&self) -> &Vector3<f64> {
        &self.cell_size
    }

    /// Voxel counts ordered (z, x, y).
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn num_voxels(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// Center of the voxel at integer index (z, x, y); out-of-range indices
    /// are a contract violation and reported as an error, not clamped.
    pub fn voxel_center(&self, index: [i64; 3]) -> Result<Vector3<f64>> {
        for axis in 0..3 {
            if index[axis] < 0 || index[axis] >= self.dims[axis] as i64 {
                return Err(Error::IndexOutOfRange {
                    index,
                    dims: self.dims,
                });
            }
        }
        Ok(self.grid_to_world([index[0] as f64, index[1] as f64, index[2] as f64]))
    }

    /// Continuous index (z, x, y) to a point in the space's local frame;
    /// integer indices land on voxel centers.
    pub fn grid_to_world(&self, index: [f64; 3]) -> Vector3<f64> {
        Vector3::new(
            self.min_corner.x + (index[1] + 0.5) * self.cell_size.x,
            self.min_corner.y + (index[2] + 0.5) * self.cell_size.y,
            self.min_corner.z + (index[0] + 0.5) * self.cell_size.z,
        )
    }

    /// Local-frame point to continuous index (z, x, y) plus an in-bounds
    /// flag (point inside the physical extent).
    pub fn world_to_grid(&self, point: &Vector3<f64>) -> ([f64; 3], bool) {
        let ix = (point.x - self.min_corner.x) / self.cell_size.x - 0.5;
        let iy = (point.y - self.min_corner.y) / self.cell_size.y - 0.5;
        let iz = (point.z - self.min_corner.z) / self.cell_size.z - 0.5;
        let in_bounds = (0..3).all(|axis| {
            point[axis] >= self.min_corner[axis] && point[axis] <= self.max_corner[axis]
        });
        ([iz, ix, iy], in_bounds)
    }

    /// Index (z, x, y) of the voxel physically containing `point`, or `None`
    /// when the point lies outside the extent. Bins are the half-open cells
    /// `[min + k*cell, min + (k+1)*cell)`, closed at the far extent edge.
    pub fn voxel_containing(&self, point: &Vector3<f64>) -> Option<[usize; 3]> {
        let mut idx = [0usize; 3];
        // axis order (x, y, z) -> dims slot (1, 2, 0)
        for (axis, slot) in [(0usize, 1usize), (1, 2), (2, 0)] {
            let rel = (point[axis] - self.min_corner[axis]) / self.cell_size[axis];
            let k = rel.floor();
            let dim = self.dims[slot] as f64;
            let k = if k == dim && point[axis] <= self.max_corner[axis] {
                // far boundary point belongs to the last cell
                dim - 1.0
            } else {
                k
            };
            if k < 0.0 || k >= dim {
                return None;
            }
            idx[slot] = k as usize;
        }
        Some(idx)
    }

    /// Flattened voxel id for index (z, x, y), row-major with y fastest.
    pub fn flat_index(&self, index: [usize; 3]) -> usize {
        (index[0] * self.dims[1] + index[1]) * self.dims[2] + index[2]
    }
}

/// Camera-frustum lattice: (depth plane, row/stride, col/stride).
///
/// Indices map to points in the camera frame (Z forward). The depth axis
/// interpolates piecewise-linearly between the configured plane depths, so
/// `grid_to_world` followed by `world_to_grid` is the identity on in-range
/// continuous indices.
#[derive(Debug, Clone, PartialEq)]
pub struct FrustumSpace {
    camera: CameraModel,
    depth_planes: Vec<f64>,
    /// (rows, cols), full-resolution pixels; equals the camera image size.
    image_dims: (usize, usize),
    stride: usize,
}

impl FrustumSpace {
    pub fn new(camera: CameraModel, depth_planes: Vec<f64>, stride: usize) -> Result<Self> {
        if depth_planes.is_empty() {
            return Err(Error::EmptyPlanes);
        }
        if depth_planes[0] <= 0.0 || depth_planes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "depth planes",
                "must be strictly increasing and positive",
            ));
        }
        if depth_planes.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite("depth planes"));
        }
        let (rows, cols) = camera.image_size();
        if stride == 0 || rows % stride != 0 || cols % stride != 0 {
            return Err(Error::invalid(
                "frustum stride",
                format!("{stride} does not divide image {rows}x{cols}"),
            ));
        }
        Ok(Self {
            image_dims: camera.image_size(),
            camera,
            depth_planes,
            stride,
        })
    }

    pub fn camera(&self) -> &CameraModel {
        &self.camera
    }

    pub fn depth_planes(&self) -> &[f64] {
        &self.depth_planes
    }

    pub fn image_dims(&self) -> (usize, usize) {
        self.image_dims
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Counts ordered (planes, rows/stride, cols/stride).
    pub fn dims(&self) -> [usize; 3] {
        [
            self.depth_planes.len(),
            self.image_dims.0 / self.stride,
            self.image_dims.1 / self.stride,
        ]
    }

    /// Depth at a continuous plane coordinate; linear between neighboring
    /// planes and linearly extrapolated past the ends.
    fn plane_depth(&self, zc: f64) -> f64 {
        let planes = &self.depth_planes;
        if planes.len() == 1 {
            return planes[0] + zc * planes[0];
        }
        let seg = (zc.floor() as i64).clamp(0, planes.len() as i64 - 2) as usize;
        planes[seg] + (zc - seg as f64) * (planes[seg + 1] - planes[seg])
    }

    /// Continuous plane coordinate of a depth; inverse of `plane_depth`.
    fn plane_coord(&self, depth: f64) -> f64 {
        let planes = &self.depth_planes;
        if planes.len() == 1 {
            return (depth - planes[0]) / planes[0];
        }
        let seg = planes
            .partition_point(|&p| p <= depth)
            .saturating_sub(1)
            .min(planes.len() - 2);
        seg as f64 + (depth - planes[seg]) / (planes[seg + 1] - planes[seg])
    }

    /// Continuous index (plane, row, col) to a camera-frame point.
    pub fn grid_to_world(&self, index: [f64; 3]) -> Vector3<f64> {
        let depth = self.plane_depth(index[0]);
        let v = index[1] * self.stride as f64;
        let u = index[2] * self.stride as f64;
        let (fx, fy) = self.camera.focal();
        let (cx, cy) = self.camera.principal_point();
        Vector3::new((u - cx) / fx * depth, (v - cy) / fy * depth, depth)
    }

    /// Camera-frame point to continuous index plus an in-bounds flag (index
    /// within the sample lattice [0, dims-1] on every axis). Points at or
    /// behind the image plane have no index and report out of bounds.
    pub fn world_to_grid(&self, point: &Vector3<f64>) -> ([f64; 3], bool) {
        match self.sample_index(point) {
            Some(ci) => {
                let dims = self.dims();
                let in_bounds =
                    (0..3).all(|a| ci[a] >= 0.0 && ci[a] <= dims[a] as f64 - 1.0);
                (ci, in_bounds)
            }
            None => ([0.0; 3], false),
        }
    }

    /// Continuous index for interpolation, `None` when the point is at or
    /// behind the image plane.
    pub fn sample_index(&self, point: &Vector3<f64>) -> Option<[f64; 3]> {
        if point.z <= EPS_DEPTH {
            return None;
        }
        let (fx, fy) = self.camera.focal();
        let (cx, cy) = self.camera.principal_point();
        let u = fx * point.x / point.z + cx;
        let v = fy * point.y / point.z + cy;
        Some([
            self.plane_coord(point.z),
            v / self.stride as f64,
            u / self.stride as f64,
        ])
    }
}

/// A coordinate system with a bidirectional grid-index <-> point mapping.
///
/// `Space` maps indices to points in its own local frame; a grid's
/// [`crate::geometry::Pose`] places that local frame relative to a base
/// frame. For [`FrustumSpace`] the local frame is the camera frame.
#[derive(Debug, Clone, PartialEq)]
pub enum Space {
    Cartesian(CartesianSpace),
    Frustum(FrustumSpace),
}

impl Space {
    /// Lattice counts ordered (z, x, y).
    pub fn dims(&self) -> [usize; 3] {
        match self {
            Space::Cartesian(s) => s.dims(),
            Space::Frustum(s) => s.dims(),
        }
    }

    pub fn num_voxels(&self) -> usize {
        let d = self.dims();
        d[0] * d[1] * d[2]
    }

    pub fn grid_to_world(&self, index: [f64; 3]) -> Vector3<f64> {
        match self {
            Space::Cartesian(s) => s.grid_to_world(index),
            Space::Frustum(s) => s.grid_to_world(index),
        }
    }

    pub fn world_to_grid(&self, point: &Vector3<f64>) -> ([f64; 3], bool) {
        match self {
            Space::Cartesian(s) => s.world_to_grid(point),
            Space::Frustum(s) => s.world_to_grid(point),
        }
    }

    /// Continuous index for interpolation, `None` where the mapping is
    /// undefined (behind a frustum camera).
    pub fn sample_index(&self, point: &Vector3<f64>) -> Option<[f64; 3]> {
        match self {
            Space::Cartesian(s) => Some(s.world_to_grid(point).0),
            Space::Frustum(s) => s.sample_index(point),
        }
    }
}

impl From<CartesianSpace> for Space {
    fn from(s: CartesianSpace) -> Self {
        Space::Cartesian(s)
    }
}

impl From<FrustumSpace> for Space {
    fn from(s: FrustumSpace) -> Self {
        Space::Frustum(s)
    }
}
