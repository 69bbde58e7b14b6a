//! LiDAR point clouds and their flat binary interchange format.
//!
//! On disk a cloud is a point count (u64 LE) followed by one 20-byte record
//! per point: x, y, z, intensity as f32 LE, then beam and azimuth indices as
//! two u16 LE packed into the fifth 32-bit word. The file carries no pose;
//! the sensor pose travels in the pipeline config.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::Pose;

/// One LiDAR return: position in the sensor frame (meters), intensity in
/// [0, 1], and the angular raster cell it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarPoint {
    pub x: f32,
    pub y: f32,
    pub z: f32,
    pub intensity: f32,
    pub beam: u16,
    pub azimuth: u16,
}

impl LidarPoint {
    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.x as f64, self.y as f64, self.z as f64)
    }

    /// Distance from the sensor origin, meters.
    pub fn range(&self) -> f64 {
        self.position().norm()
    }
}

/// A set of LiDAR returns plus the sensor-to-reference pose of the frame
/// they were captured in.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<LidarPoint>,
    pub pose: Pose,
}

impl PointCloud {
    pub fn new(points: Vec<LidarPoint>, pose: Pose) -> Self {
        Self { points, pose }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Writes points in the flat binary layout.
pub fn write_points<W: Write>(points: &[LidarPoint], mut w: W) -> Result<()> {
    w.write_all(&(points.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(points.len() * 20);
    for p in points {
        buf.extend_from_slice(&p.x.to_le_bytes());
        buf.extend_from_slice(&p.y.to_le_bytes());
        buf.extend_from_slice(&p.z.to_le_bytes());
        buf.extend_from_slice(&p.intensity.to_le_bytes());
        buf.extend_from_slice(&p.beam.to_le_bytes());
        buf.extend_from_slice(&p.azimuth.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads points from the flat binary layout, validating finiteness.
pub fn read_points<R: Read>(mut r: R) -> Result<Vec<LidarPoint>> {
    let mut count_bytes = [0u8; 8];
    read_all(&mut r, &mut count_bytes)?;
    let count = u64::from_le_bytes(count_bytes);
    if count > (isize::MAX as u64) / 20 {
        return Err(Error::DimOverflow(count as u128));
    }
    let mut body = vec![0u8; count as usize * 20];
    read_all(&mut r, &mut body)?;
    let mut points = Vec::with_capacity(count as usize);
    for rec in body.chunks_exact(20) {
        let f = |o: usize| f32::from_le_bytes([rec[o], rec[o + 1], rec[o + 2], rec[o + 3]]);
        let point = LidarPoint {
            x: f(0),
            y: f(4),
            z: f(8),
            intensity: f(12),
            beam: u16::from_le_bytes([rec[16], rec[17]]),
            azimuth: u16::from_le_bytes([rec[18], rec[19]]),
        };
        if !(point.x.is_finite()
            && point.y.is_finite()
            && point.z.is_finite()
            && point.intensity.is_finite())
        {
            return Err(Error::NonFinite("point cloud record"));
        }
        points.push(point);
    }
    Ok(points)
}

pub fn write_points_file<P: AsRef<Path>>(points: &[LidarPoint], path: P) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_points(points, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_points_file<P: AsRef<Path>>(path: P) -> Result<Vec<LidarPoint>> {
    read_points(BufReader::new(File::open(path)?))
}

fn read_all<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == ErrorKind::UnexpectedEof {
            Error::TruncatedPayload {
                expected: buf.len() as u64,
                actual: 0,
            }
        } else {
            Error::Io(e)
        }
    })
}
