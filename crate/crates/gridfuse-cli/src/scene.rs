//! Deterministic synthetic scenes: randomized boxes over a ground plane,
//! flat-shaded camera renders, a LiDAR scan, and an on-disk manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use gridfuse::geometry::CameraModel;
use gridfuse::lidar::{ray_box_intersection, synth_scan, BoxAnnotation, Scene};
use gridfuse::points::{write_points_file, PointCloud};

use crate::config::{PipelineConfig, Result, SceneConfig};
use crate::CliError;

/// JSON form of one annotation box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRecord {
    pub id: u32,
    pub center: [f64; 3],
    pub size: [f64; 3],
    pub yaw: f64,
}

impl BoxRecord {
    pub fn from_box(b: &BoxAnnotation) -> Self {
        Self {
            id: b.id,
            center: [b.center.x, b.center.y, b.center.z],
            size: [b.size.x, b.size.y, b.size.z],
            yaw: b.yaw,
        }
    }

    pub fn to_box(&self) -> Result<BoxAnnotation> {
        BoxAnnotation::new(
            Vector3::from_row_slice(&self.center),
            Vector3::from_row_slice(&self.size),
            self.yaw,
            self.id,
        )
        .map_err(|e| CliError::Input(format!("invalid box record: {e}")))
    }
}

/// Everything one synthetic frame contains, in memory.
pub struct GeneratedScene {
    pub scene: Scene,
    pub cloud: PointCloud,
    /// (3, rows, cols) RGB renders in [0, 1], keyed by camera name.
    pub images: BTreeMap<String, Array3<f32>>,
}

/// Randomized box layout drawn from a seeded generator: deterministic for a
/// given (config, seed).
pub fn generate_boxes(config: &SceneConfig, seed: u64) -> Vec<BoxAnnotation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..config.num_boxes)
        .map(|i| {
            let radius = rng.random_range(config.spawn_range[0]..config.spawn_range[1]);
            let azimuth = rng
                .random_range(config.azimuth_range_deg[0]..config.azimuth_range_deg[1])
                .to_radians();
            let size = Vector3::new(
                rng.random_range(config.box_size_min[0]..config.box_size_max[0]),
                rng.random_range(config.box_size_min[1]..config.box_size_max[1]),
                rng.random_range(config.box_size_min[2]..config.box_size_max[2]),
            );
            let center = Vector3::new(
                radius * azimuth.cos(),
                radius * azimuth.sin(),
                config.ground_height + size.z / 2.0,
            );
            let yaw = rng.random_range(0.0..std::f64::consts::TAU);
            BoxAnnotation::new(center, size, yaw, i as u32).expect("positive sizes")
        })
        .collect()
}

/// Flat color for a box id, deterministic and visually spread out.
fn box_color(id: u32) -> [f32; 3] {
    let hue = (id as f32 * 0.618_034) % 1.0;
    let h = hue * 6.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [0.25 + 0.65 * r, 0.25 + 0.65 * g, 0.25 + 0.65 * b]
}

/// Renders one camera view of the scene: flat-shaded boxes over a ground
/// plane and a sky gradient.
pub fn render_camera(camera: &CameraModel, scene: &Scene) -> Array3<f32> {
    let (rows, cols) = camera.image_size();
    let (fx, fy) = camera.focal();
    let (cx, cy) = camera.principal_point();
    let origin = *camera.pose().translation();
    let rotation = *camera.pose().rotation();

    let mut image = Array3::zeros((3, rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            let dir_cam = Vector3::new(
                (c as f64 - cx) / fx,
                (r as f64 - cy) / fy,
                1.0,
            )
            .normalize();
            let dir = rotation * dir_cam;

            let mut best_t = f64::INFINITY;
            let mut color = {
                // Sky gradient by ray elevation.
                let up = (dir.z.clamp(-1.0, 1.0) + 1.0) as f32 / 2.0;
                [0.35 + 0.25 * up, 0.45 + 0.25 * up, 0.6 + 0.3 * up]
            };
            if let Some(h) = scene.ground_height {
                if dir.z.abs() > 1e-12 {
                    let t = (h - origin.z) / dir.z;
                    if t > 0.05 {
                        best_t = t;
                        color = [0.32, 0.3, 0.28];
                    }
                }
            }
            for b in &scene.boxes {
                if let Some(t) = ray_box_intersection(&origin, &dir, b) {
                    if t < best_t {
                        best_t = t;
                        color = box_color(b.id);
                    }
                }
            }
            for ch in 0..3 {
                image[(ch, r, c)] = color[ch];
            }
        }
    }
    image
}

/// Generates the frame the pipeline config describes: boxes, a scan with
/// the "hd" profile, and one render per configured camera.
pub fn generate(config: &PipelineConfig, seed: u64) -> Result<GeneratedScene> {
    let boxes = generate_boxes(&config.scene, seed);
    let scene = Scene {
        boxes,
        ground_height: config.scene.ground.then_some(config.scene.ground_height),
    };
    let sensor_pose = config.lidar.sensor_pose.to_pose()?;
    let cloud = synth_scan(&scene, &config.lidar.profile("hd")?, &sensor_pose);

    let mut images = BTreeMap::new();
    for cam_config in &config.cameras {
        let camera = cam_config.to_camera()?;
        images.insert(cam_config.name.clone(), render_camera(&camera, &scene));
    }
    Ok(GeneratedScene {
        scene,
        cloud,
        images,
    })
}

/// On-disk index of a scene directory: per-file SHA-256 checksums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub files: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_checksum(path: &Path) -> Result<String> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

fn quantize(image: &Array3<f32>) -> image::RgbImage {
    let (_, rows, cols) = image.dim();
    image::RgbImage::from_fn(cols as u32, rows as u32, |x, y| {
        let px = |ch: usize| {
            (image[(ch, y as usize, x as usize)].clamp(0.0, 1.0) * 255.0).round() as u8
        };
        image::Rgb([px(0), px(1), px(2)])
    })
}

/// Writes the scene to a directory: `boxes.json`, `cloud.bin`,
/// `cam_<name>.png`, and a `manifest.json` with per-file checksums.
pub fn write_scene(dir: &Path, generated: &GeneratedScene, seed: u64) -> Result<Manifest> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    let mut files = BTreeMap::new();

    let boxes: Vec<BoxRecord> = generated
        .scene
        .boxes
        .iter()
        .map(BoxRecord::from_box)
        .collect();
    let boxes_path = dir.join("boxes.json");
    fs::write(&boxes_path, serde_json::to_string_pretty(&boxes).unwrap())
        .map_err(|e| CliError::Input(format!("cannot write boxes.json: {e}")))?;
    files.insert("boxes.json".to_string(), file_checksum(&boxes_path)?);

    let cloud_path = dir.join("cloud.bin");
    write_points_file(&generated.cloud.points, &cloud_path)
        .map_err(|e| CliError::Input(format!("cannot write cloud.bin: {e}")))?;
    files.insert("cloud.bin".to_string(), file_checksum(&cloud_path)?);

    for (name, image) in &generated.images {
        let file_name = format!("cam_{name}.png");
        let path = dir.join(&file_name);
        quantize(image)
            .save(&path)
            .map_err(|e| CliError::Input(format!("cannot write {file_name}: {e}")))?;
        files.insert(file_name, file_checksum(&path)?);
    }

    let manifest = Manifest { seed, files };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).unwrap(),
    )
    .map_err(|e| CliError::Input(format!("cannot write manifest.json: {e}")))?;
    Ok(manifest)
}

pub fn read_boxes(path: &Path) -> Result<Vec<BoxAnnotation>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let records: Vec<BoxRecord> = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("cannot parse {}: {e}", path.display())))?;
    records.iter().map(BoxRecord::to_box).collect()
}

/// Loads an image as (3, rows, cols) floats in [0, 1]. PNG by extension;
/// anything else is read as a planar float binary (u32 channel count, u32
/// rows, u32 cols, then C*rows*cols f32 LE).
pub fn read_image(path: &Path) -> Result<Array3<f32>> {
    let err = |e: String| CliError::Input(format!("{}: {e}", path.display()));
    if path.extension().and_then(|e| e.to_str()) == Some("png") {
        let img = image::open(path)
            .map_err(|e| err(e.to_string()))?
            .to_rgb8();
        let (cols, rows) = img.dimensions();
        return Ok(Array3::from_shape_fn(
            (3, rows as usize, cols as usize),
            |(c, r, col)| img.get_pixel(col as u32, r as u32)[c] as f32 / 255.0,
        ));
    }
    let bytes = fs::read(path).map_err(|e| err(e.to_string()))?;
    if bytes.len() < 12 {
        return Err(err("planar float binary shorter than its header".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (channels, rows, cols) = (word(0), word(4), word(8));
    let expected = 12 + channels * rows * cols * 4;
    if bytes.len() != expected {
        return Err(err(format!(
            "planar float binary holds {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let values: Vec<f32> = bytes[12..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Array3::from_shape_vec((channels, rows, cols), values)
        .map_err(|e| err(e.to_string()))
}

/// Writes the planar float binary form of an image.
pub fn write_image_binary(path: &Path, image: &Array3<f32>) -> Result<()> {
    let (channels, rows, cols) = image.dim();
    let mut bytes = Vec::with_capacity(12 + image.len() * 4);
    for dim in [channels, rows, cols] {
        bytes.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for v in image.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

/// Path of a camera's rendered image inside a scene directory.
pub fn camera_image_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("cam_{name}.png"))
}
