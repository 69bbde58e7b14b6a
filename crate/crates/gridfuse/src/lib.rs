//! A geometric sensor-fusion engine built around feature grids.
//!
//! The crate provides the primitives for moving sensor data between
//! coordinate systems:
//!
//! * [`geometry`] — coordinate [`Space`](geometry::Space)s (Cartesian voxel
//!   lattices and camera frustums), rigid [`Pose`](geometry::Pose)s, and
//!   pinhole [`CameraModel`](geometry::CameraModel)s.
//! * [`grid`] — the 5-D (N, C, Z, X, Y) feature [`Grid`](grid::Grid) bound
//!   to a space and pose, with bit-exact FGRD persistence.
//! * [`warp`] — `space_warp`, the differentiable trilinear resampler that
//!   moves grids between spaces, with its exact adjoint.
//! * [`raycast`] — uplift of multi-camera image features into a voxel grid
//!   by voxel-centroid projection, gather, and scatter-reduce.
//! * [`pointnet`] — point-cloud voxelization and a small per-point network
//!   with per-voxel max pooling.
//! * [`stereo`] — plane-sweep cost volumes over a camera frustum.
//! * [`fusion`] — warping encoder grids to a common space, fusing them, and
//!   adapting backbone output to per-head spaces; occupancy ground truth and
//!   metrics.
//! * [`lidar`] — synthetic scan generation, beam/azimuth density
//!   degradation, and range-image occlusion filtering.
//! * [`gradcheck`] — finite-difference verification of every analytic
//!   gradient in the crate.
//!
//! A narrative guide with runnable examples lives in the `book/` directory
//! of the repository; its code snippets are compiled and run as part of
//! `cargo test`.
//!
//! ```
//! use gridfuse::geometry::{CartesianSpace, Pose, Space};
//! use gridfuse::grid::coordinate_grid;
//! use nalgebra::Vector3;
//!
//! let space = CartesianSpace::new(
//!     Vector3::new(-8.0, -8.0, 0.0),
//!     Vector3::new(8.0, 8.0, 4.0),
//!     Vector3::new(0.5, 0.5, 1.0),
//! )?;
//! assert_eq!(space.dims(), [4, 32, 32]); // (z, x, y)
//!
//! let grid = coordinate_grid(&space, &Pose::identity("vehicle"));
//! assert_eq!(grid.shape(), [1, 3, 4, 32, 32]);
//! # Ok::<(), gridfuse::Error>(())
//! ```

pub mod error;
pub mod features;
pub mod fusion;
pub mod geometry;
pub mod gradcheck;
pub mod grid;
pub mod lidar;
pub mod pointnet;
pub mod points;
pub mod presets;
pub mod raycast;
pub mod stereo;
pub mod warp;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book;
