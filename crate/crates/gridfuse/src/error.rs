//! Crate-wide error type.

/// Errors reported by grid, geometry, encoder, and simulation operations.
///
/// File-format failures (`BadMagic`, `BadVersion`, `TruncatedPayload`,
/// `DimOverflow`) are distinct variants so callers can map them to distinct
/// exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("index {index:?} out of range for dims {dims:?}")]
    IndexOutOfRange { index: [i64; 3], dims: [usize; 3] },

    #[error("{context}: inputs disagree on {field}")]
    Mismatch {
        context: &'static str,
        field: &'static str,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("bad magic: not an FGRD stream")]
    BadMagic,

    #[error("unsupported FGRD version {0}")]
    BadVersion(u16),

    #[error("truncated payload: expected {expected} bytes, got {actual}")]
    TruncatedPayload { expected: u64, actual: u64 },

    #[error("dimension overflow: {0} elements exceed addressable size")]
    DimOverflow(u128),

    #[error("empty depth-plane list")]
    EmptyPlanes,

    #[error("incompatible lidar profiles: {0}")]
    IncompatibleProfiles(String),

    #[error("voxel id {id} out of range for {num_voxels} voxels")]
    VoxelIdRange { id: usize, num_voxels: usize },

    #[error("invalid {what}: {why}")]
    InvalidArgument { what: &'static str, why: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::InvalidArgument {
            what,
            why: why.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
