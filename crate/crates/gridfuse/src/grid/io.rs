//! FGRD binary persistence for grids.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic            4 bytes  "FGRD"
//! version          u16      currently 1
//! N, C, Z, X, Y    u32 each
//! space descriptor tag u8: 0 = cartesian, 1 = frustum
//!   cartesian:     min_corner 3xf64, max_corner 3xf64, cell_size 3xf64   (x, y, z order)
//!   frustum:       fx f64, fy f64, cx f64, cy f64, rows u32, cols u32,
//!                  camera pose block, plane count u32, planes Kxf64, stride u32
//! pose block       base_frame length u16 + UTF-8 bytes,
//!                  12xf64 row-major 3x4 [R | t]
//! payload          N*C*Z*X*Y f32 values, row-major (N, C, Z, X, Y), Y fastest
//! ```
//!
//! Header metadata is stored at full f64 width so `read(write(g))` is
//! bit-identical to `g`, space and pose included.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use ndarray::Array5;

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, CartesianSpace, FrustumSpace, Pose, Space};
use crate::grid::Grid;

pub const FGRD_MAGIC: [u8; 4] = *b"FGRD";
pub const FGRD_VERSION: u16 = 1;

const TAG_CARTESIAN: u8 = 0;
const TAG_FRUSTUM: u8 = 1;

/// Serializes a grid to an FGRD stream.
pub fn write_grid<W: Write>(grid: &Grid, mut w: W) -> Result<()> {
    w.write_all(&FGRD_MAGIC)?;
    w.write_all(&FGRD_VERSION.to_le_bytes())?;
    let [n, c, z, x, y] = grid.shape();
    for dim in [n, c, z, x, y] {
        let dim = u32::try_from(dim)
            .map_err(|_| Error::DimOverflow(dim as u128))?;
        w.write_all(&dim.to_le_bytes())?;
    }
    write_space(&mut w, grid.space())?;
    write_pose(&mut w, grid.pose())?;
    let data = grid.data().as_standard_layout();
    let slice = data.as_slice().expect("standard layout");
    let mut buf = Vec::with_capacity(slice.len() * 4);
    for v in slice {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Deserializes a grid from an FGRD stream.
///
/// Failure modes are distinct: [`Error::BadMagic`], [`Error::BadVersion`],
/// [`Error::TruncatedPayload`], and [`Error::DimOverflow`].
pub fn read_grid<R: Read>(mut r: R) -> Result<Grid> {
    let mut magic = [0u8; 4];
    read_or_truncated(&mut r, &mut magic)?;
    if magic != FGRD_MAGIC {
        return Err(Error::BadMagic);
    }
    let version = read_u16(&mut r)?;
    if version != FGRD_VERSION {
        return Err(Error::BadVersion(version));
    }
    let mut shape = [0usize; 5];
    for slot in &mut shape {
        *slot = read_u32(&mut r)? as usize;
    }
    let element_count: u128 = shape.iter().map(|&d| d as u128).product();
    if element_count > (isize::MAX as u128) / 4 {
        return Err(Error::DimOverflow(element_count));
    }
    let space = read_space(&mut r)?;
    let pose = read_pose(&mut r)?;
    if [shape[2], shape[3], shape[4]] != space.dims() {
        return Err(Error::Mismatch {
            context: "read_grid",
            field: "dims",
        });
    }

    let expected_bytes = element_count as u64 * 4;
    let mut payload = vec![0u8; expected_bytes as usize];
    let mut filled = 0usize;
    while filled < payload.len() {
        match r.read(&mut payload[filled..]) {
            Ok(0) => {
                return Err(Error::TruncatedPayload {
                    expected: expected_bytes,
                    actual: filled as u64,
                });
            }
            Ok(k) => filled += k,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let data = Array5::from_shape_vec(
        (shape[0], shape[1], shape[2], shape[3], shape[4]),
        values,
    )
    .expect("payload length checked against dims");
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("FGRD payload"));
    }
    Ok(Grid::from_parts(data, space, pose))
}

/// Writes a grid to a file, buffered.
pub fn write_grid_file<P: AsRef<Path>>(grid: &Grid, path: P) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_grid(grid, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads a grid from a file, buffered.
pub fn read_grid_file<P: AsRef<Path>>(path: P) -> Result<Grid> {
    let file = File::open(path)?;
    read_grid(BufReader::new(file))
}

fn write_space<W: Write>(w: &mut W, space: &Space) -> Result<()> {
    match space {
        Space::Cartesian(s) => {
            w.write_all(&[TAG_CARTESIAN])?;
            write_vec3(w, s.min_corner())?;
            write_vec3(w, s.max_corner())?;
            write_vec3(w, s.cell_size())?;
        }
        Space::Frustum(s) => {
            w.write_all(&[TAG_FRUSTUM])?;
            let cam = s.camera();
            let (fx, fy) = cam.focal();
            let (cx, cy) = cam.principal_point();
            for v in [fx, fy, cx, cy] {
                w.write_all(&v.to_le_bytes())?;
            }
            let (rows, cols) = cam.image_size();
            w.write_all(&(rows as u32).to_le_bytes())?;
            w.write_all(&(cols as u32).to_le_bytes())?;
            write_pose(w, cam.pose())?;
            let planes = s.depth_planes();
            w.write_all(&(planes.len() as u32).to_le_bytes())?;
            for p in planes {
                w.write_all(&p.to_le_bytes())?;
            }
            w.write_all(&(s.stride() as u32).to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_space<R: Read>(r: &mut R) -> Result<Space> {
    let mut tag = [0u8; 1];
    read_or_truncated(r, &mut tag)?;
    match tag[0] {
        TAG_CARTESIAN => {
            let min = read_vec3(r)?;
            let max = read_vec3(r)?;
            let cell = read_vec3(r)?;
            Ok(Space::Cartesian(CartesianSpace::new(min, max, cell)?))
        }
        TAG_FRUSTUM => {
            let fx = read_f64(r)?;
            let fy = read_f64(r)?;
            let cx = read_f64(r)?;
            let cy = read_f64(r)?;
            let rows = read_u32(r)? as usize;
            let cols = read_u32(r)? as usize;
            let pose = read_pose(r)?;
            let camera = CameraModel::new((fx, fy), (cx, cy), (rows, cols), pose)?;
            let count = read_u32(r)? as usize;
            let mut planes = Vec::with_capacity(count);
            for _ in 0..count {
                planes.push(read_f64(r)?);
            }
            let stride = read_u32(r)? as usize;
            Ok(Space::Frustum(FrustumSpace::new(camera, planes, stride)?))
        }
        other => Err(Error::invalid(
            "space descriptor tag",
            format!("unknown tag {other}"),
        )),
    }
}

fn write_pose<W: Write>(w: &mut W, pose: &Pose) -> Result<()> {
    let frame = pose.base_frame().as_bytes();
    let len = u16::try_from(frame.len())
        .map_err(|_| Error::invalid("base frame", "name longer than 65535 bytes"))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(frame)?;
    let rot = pose.rotation();
    let t = pose.translation();
    for row in 0..3 {
        for col in 0..3 {
            w.write_all(&rot[(row, col)].to_le_bytes())?;
        }
        w.write_all(&t[row].to_le_bytes())?;
    }
    Ok(())
}

fn read_pose<R: Read>(r: &mut R) -> Result<Pose> {
    let len = read_u16(r)? as usize;
    let mut frame = vec![0u8; len];
    read_or_truncated(r, &mut frame)?;
    let frame = String::from_utf8(frame)
        .map_err(|_| Error::invalid("base frame", "not valid UTF-8"))?;
    let mut rot = Matrix3::zeros();
    let mut t = Vector3::zeros();
    for row in 0..3 {
        for col in 0..3 {
            rot[(row, col)] = read_f64(r)?;
        }
        t[row] = read_f64(r)?;
    }
    Pose::new(rot, t, frame)
}

fn write_vec3<W: Write>(w: &mut W, v: &Vector3<f64>) -> Result<()> {
    for k in 0..3 {
        w.write_all(&v[k].to_le_bytes())?;
    }
    Ok(())
}

fn read_vec3<R: Read>(r: &mut R) -> Result<Vector3<f64>> {
    Ok(Vector3::new(read_f64(r)?, read_f64(r)?, read_f64(r)?))
}

fn read_or_truncated<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == ErrorKind::UnexpectedEof {
            Error::TruncatedPayload {
                expected: buf.len() as u64,
                actual: 0,
            }
        } else {
            e.into()
        }
    })
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
    let mut b = [0u8; 2];
    read_or_truncated(r, &mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_or_truncated(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    read_or_truncated(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}
