//! The `Grid` container: a 5-D feature volume bound to a space and a pose.

mod io;

pub use io::{read_grid, read_grid_file, write_grid, write_grid_file, FGRD_MAGIC, FGRD_VERSION};

use ndarray::{Array5, Axis, Slice};

use crate::error::{Error, Result};
use crate::geometry::{CartesianSpace, Pose, Space};

/// A dense feature volume of shape (N, C, Z, X, Y) bound to a [`Space`] and
/// a grid-to-reference [`Pose`].
///
/// Values are 32-bit floats stored row-major with Y fastest; every module
/// operation keeps them finite. Grids are immutable values: operations
/// return new grids and concurrent reads are safe.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    data: Array5<f32>,
    space: Space,
    pose: Pose,
}

impl Grid {
    /// Binds `data` to a space and pose, checking that the spatial dims of
    /// `data` equal the space's dims and that every value is finite.
    pub fn new(data: Array5<f32>, space: Space, pose: Pose) -> Result<Self> {
        let (_, _, z, x, y) = data.dim();
        if [z, x, y] != space.dims() {
            return Err(Error::Mismatch {
                context: "grid construction",
                field: "dims",
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid data"));
        }
        Ok(Self { data, space, pose })
    }

    /// Zero-filled grid with `n` batch entries and `channels` channels.
    pub fn zeros(n: usize, channels: usize, space: Space, pose: Pose) -> Self {
        let [z, x, y] = space.dims();
        Self {
            data: Array5::zeros((n, channels, z, x, y)),
            space,
            pose,
        }
    }

    /// Internal constructor for operation outputs whose values are finite by
    /// construction.
    pub(crate) fn from_parts(data: Array5<f32>, space: Space, pose: Pose) -> Self {
        debug_assert_eq!(
            {
                let (_, _, z, x, y) = data.dim();
                [z, x, y]
            },
            space.dims()
        );
        Self { data, space, pose }
    }

    pub fn data(&self) -> &Array5<f32> {
        &self.data
    }

    pub fn into_data(self) -> Array5<f32> {
        self.data
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn pose(&self) -> &Pose {
        &self.pose
    }

    pub fn batch(&self) -> usize {
        self.data.dim().0
    }

    pub fn channels(&self) -> usize {
        self.data.dim().1
    }

    /// Spatial dims ordered (z, x, y).
    pub fn dims(&self) -> [usize; 3] {
        let (_, _, z, x, y) = self.data.dim();
        [z, x, y]
    }

    /// Full shape (N, C, Z, X, Y).
    pub fn shape(&self) -> [usize; 5] {
        let (n, c, z, x, y) = self.data.dim();
        [n, c, z, x, y]
    }

    /// New grid holding channels `[start, end)` of this one.
    pub fn channel_slice(&self, start: usize, end: usize) -> Result<Grid> {
        if start > end || end > self.channels() {
            return Err(Error::invalid(
                "channel range",
                format!("[{start}, {end}) of {} channels", self.channels()),
            ));
        }
        let data = self
            .data
            .slice_axis(Axis(1), Slice::from(start..end))
            .to_owned();
        Ok(Grid {
            data,
            space: self.space.clone(),
            pose: self.pose.clone(),
        })
    }

    pub(crate) fn ensure_finite(&self, context: &'static str) -> Result<()> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(context));
        }
        Ok(())
    }
}

/// Concatenates `b`'s channels after `a`'s. Both grids must share the same
/// space, pose, batch size, and spatial dims; a mismatch reports the
/// offending field.
pub fn concat_channels(a: &Grid, b: &Grid) -> Result<Grid> {
    const CTX: &str = "concat_channels";
    if a.space != b.space {
        return Err(Error::Mismatch {
            context: CTX,
            field: "space",
        });
    }
    if a.pose != b.pose {
        return Err(Error::Mismatch {
            context: CTX,
            field: "pose",
        });
    }
    if a.batch() != b.batch() {
        return Err(Error::Mismatch {
            context: CTX,
            field: "batch",
        });
    }
    if a.dims() != b.dims() {
        return Err(Error::Mismatch {
            context: CTX,
            field: "dims",
        });
    }
    let data = ndarray::concatenate(Axis(1), &[a.data.view(), b.data.view()])
        .expect("shape-checked concatenation");
    Ok(Grid {
        data,
        space: a.space.clone(),
        pose: a.pose.clone(),
    })
}

/// C=3 grid whose channels are the (x, y, z) base-frame coordinates of every
/// voxel center under `pose`.
pub fn coordinate_grid(space: &CartesianSpace, pose: &Pose) -> Grid {
    let [dz, dx, dy] = space.dims();
    let mut data = Array5::zeros((1, 3, dz, dx, dy));
    for z in 0..dz {
        for x in 0..dx {
            for y in 0..dy {
                let center = space.grid_to_world([z as f64, x as f64, y as f64]);
                let world = pose.apply(&center);
                data[(0, 0, z, x, y)] = world.x as f32;
                data[(0, 1, z, x, y)] = world.y as f32;
                data[(0, 2, z, x, y)] = world.z as f32;
            }
        }
    }
    Grid::from_parts(data, Space::Cartesian(space.clone()), pose.clone())
}
