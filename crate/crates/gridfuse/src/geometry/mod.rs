//! Coordinate systems, rigid transforms, and camera models.
//!
//! Conventions used across the crate:
//!
//! * World/vehicle frames are right-handed with X forward, Y left, Z up.
//! * Camera frames are Z forward, X right, Y down.
//! * Grid indices are ordered (z, x, y), matching the (N, C, Z, X, Y)
//!   feature-tensor layout; world points are (x, y, z) vectors in meters.
//!
//! All types here are immutable after construction and all operations are
//! pure functions, so values can be shared freely across threads.

mod camera;
mod pose;
mod space;

pub use camera::{CameraModel, Projection, EPS_DEPTH};
pub use pose::{Pose, ORTHONORMALITY_TOL};
pub use space::{CartesianSpace, FrustumSpace, Space};
