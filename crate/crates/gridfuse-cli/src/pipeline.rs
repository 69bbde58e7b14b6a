//! The end-to-end pipeline: synthesize a scene, run the configured encoder
//! list, fuse in the common space, adapt to each head, and write every
//! intermediate grid plus a summary report.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use gridfuse::features::ImageFeatureMap;
use gridfuse::fusion::{fuse, head_adapt, Backbone};
use gridfuse::grid::{write_grid_file, Grid};
use gridfuse::lidar::degrade;
use gridfuse::pointnet::{pointnet_encode, voxelize, PointNetWeights};
use gridfuse::points::{write_points_file, PointCloud};
use gridfuse::raycast::raycast;
use gridfuse::stereo::cost_volume;

use crate::config::{EncoderConfig, PipelineConfig, Result};
use crate::scene::{self, file_checksum, GeneratedScene};
use crate::CliError;

/// Shape and checksum of one grid artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    /// (N, C, Z, X, Y)
    pub shape: [usize; 5],
    pub sha256: String,
    pub path: String,
}

/// The `summary.json` a pipeline run writes. Timings vary between runs;
/// every other field, and every artifact the checksum map points at, is
/// byte-reproducible for a fixed seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub grids: BTreeMap<String, GridReport>,
    /// Relative path -> SHA-256 of every artifact except this summary.
    pub artifacts: BTreeMap<String, String>,
    pub timings_ms: BTreeMap<String, f64>,
}

/// Applies the configured featurizer to one named camera image.
pub fn featurize_image(
    config: &PipelineConfig,
    name: &str,
    image: &Array3<f32>,
) -> Result<ImageFeatureMap> {
    let camera = config.camera(name)?.to_camera()?;
    let featurizer = config.featurizer.build();
    Ok(featurizer.featurize(image.view(), &camera)?)
}

/// Runs one encoder over in-memory scene data.
pub fn run_encoder(
    config: &PipelineConfig,
    encoder: &EncoderConfig,
    cloud: &PointCloud,
    images: &BTreeMap<String, Array3<f32>>,
) -> Result<Grid> {
    match encoder {
        EncoderConfig::Pointnet {
            space,
            pose,
            hidden,
            embed,
            weight_seed,
        } => {
            let space = space.to_cartesian()?;
            let pose = pose.to_pose()?;
            let weights = PointNetWeights::seeded(*hidden, *embed, *weight_seed);
            let buckets = voxelize(cloud, &space, &pose);
            Ok(pointnet_encode(&buckets, &weights, &space, &pose)?)
        }
        EncoderConfig::Raycast {
            space,
            pose,
            cameras,
            reduction,
        } => {
            let space = space.to_cartesian()?;
            let pose = pose.to_pose()?;
            let maps: Vec<ImageFeatureMap> = cameras
                .iter()
                .map(|name| {
                    let image = images.get(name).ok_or_else(|| {
                        CliError::Input(format!("no rendered image for camera \"{name}\""))
                    })?;
                    featurize_image(config, name, image)
                })
                .collect::<Result<_>>()?;
            Ok(raycast(&maps, &space, &pose, (*reduction).into())?)
        }
        EncoderConfig::StereoCv {
            left,
            right,
            planes,
            mode,
        } => {
            let left_image = images.get(left).ok_or_else(|| {
                CliError::Input(format!("no rendered image for camera \"{left}\""))
            })?;
            let right_image = images.get(right).ok_or_else(|| {
                CliError::Input(format!("no rendered image for camera \"{right}\""))
            })?;
            let left_map = featurize_image(config, left, left_image)?;
            let right_map = featurize_image(config, right, right_image)?;
            Ok(cost_volume(
                &left_map,
                &right_map,
                &planes.to_planes()?,
                (*mode).into(),
            )?)
        }
    }
}

/// The point cloud the encoders consume: the raw "hd" scan, or that scan
/// degraded to the active profile.
pub fn active_cloud(config: &PipelineConfig, generated: &GeneratedScene) -> Result<PointCloud> {
    if config.lidar.active == "hd" {
        return Ok(generated.cloud.clone());
    }
    let from = config.lidar.profile("hd")?;
    let to = config.lidar.profile(&config.lidar.active)?;
    Ok(degrade(&generated.cloud, &from, &to)?)
}

/// Runs the full pipeline into `out_dir` and returns the summary, which is
/// also written as `summary.json`.
pub fn run(config: &PipelineConfig, out_dir: &Path) -> Result<Summary> {
    if config.encoders.is_empty() {
        return Err(CliError::Config(
            "pipeline declares zero encoders".to_string(),
        ));
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", out_dir.display())))?;

    let mut timings: BTreeMap<String, f64> = BTreeMap::new();
    let mut artifacts: BTreeMap<String, String> = BTreeMap::new();
    let mut grids: BTreeMap<String, GridReport> = BTreeMap::new();

    let record_grid = |name: &str,
                           grid: &Grid,
                           grids: &mut BTreeMap<String, GridReport>,
                           artifacts: &mut BTreeMap<String, String>|
     -> Result<()> {
        let file_name = format!("{name}.fgrd");
        let path = out_dir.join(&file_name);
        write_grid_file(grid, &path)?;
        let sha256 = file_checksum(&path)?;
        artifacts.insert(file_name.clone(), sha256.clone());
        grids.insert(
            name.to_string(),
            GridReport {
                shape: grid.shape(),
                sha256,
                path: file_name,
            },
        );
        Ok(())
    };

    // Scene synthesis.
    let t0 = Instant::now();
    let generated = scene::generate(config, config.seed)?;
    let manifest = scene::write_scene(&out_dir.join("scene"), &generated, config.seed)?;
    for (file, sha) in &manifest.files {
        artifacts.insert(format!("scene/{file}"), sha.clone());
    }
    artifacts.insert(
        "scene/manifest.json".to_string(),
        file_checksum(&out_dir.join("scene/manifest.json"))?,
    );
    timings.insert("scene".to_string(), t0.elapsed().as_secs_f64() * 1e3);

    // Optional density degradation.
    let t0 = Instant::now();
    let cloud = active_cloud(config, &generated)?;
    if config.lidar.active != "hd" {
        let name = format!("scene/cloud_{}.bin", config.lidar.active);
        let path = out_dir.join(&name);
        write_points_file(&cloud.points, &path)?;
        artifacts.insert(name, file_checksum(&path)?);
    }
    timings.insert("lidar".to_string(), t0.elapsed().as_secs_f64() * 1e3);

    // Encoders.
    let mut encoder_grids = Vec::new();
    for (i, encoder) in config.encoders.iter().enumerate() {
        let t0 = Instant::now();
        let grid = run_encoder(config, encoder, &cloud, &generated.images)?;
        let name = if config.encoders.iter().filter(|e| e.kind() == encoder.kind()).count() > 1 {
            format!("enc_{}_{i}", encoder.kind().replace('-', "_"))
        } else {
            format!("enc_{}", encoder.kind().replace('-', "_"))
        };
        timings.insert(name.clone(), t0.elapsed().as_secs_f64() * 1e3);
        record_grid(&name, &grid, &mut grids, &mut artifacts)?;
        encoder_grids.push(grid);
    }

    // Fuse in the common space and run the backbone sub-network.
    let t0 = Instant::now();
    let common_space = config.common_space.to_space()?;
    let common_pose = config.common_pose.to_pose()?;
    let backbone = Backbone::identity(
        common_space.clone(),
        common_pose.clone(),
        config.fusion.into(),
    );
    let fused = backbone.forward(&encoder_grids)?;
    timings.insert("fuse".to_string(), t0.elapsed().as_secs_f64() * 1e3);
    record_grid("fused", &fused, &mut grids, &mut artifacts)?;

    // Heads.
    for head in &config.heads {
        let t0 = Instant::now();
        let adapted = head_adapt(&fused, &head.space.to_space()?, &head.pose.to_pose()?)?;
        let name = format!("head_{}", head.name);
        timings.insert(name.clone(), t0.elapsed().as_secs_f64() * 1e3);
        record_grid(&name, &adapted, &mut grids, &mut artifacts)?;
    }

    let summary = Summary {
        seed: config.seed,
        grids,
        artifacts,
        timings_ms: timings,
    };
    std::fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).unwrap(),
    )
    .map_err(|e| CliError::Input(format!("cannot write summary.json: {e}")))?;
    Ok(summary)
}

/// Convenience used by tests: fuse without the scene machinery.
pub fn fuse_grids(config: &PipelineConfig, grids: &[Grid]) -> Result<Grid> {
    let space = config.common_space.to_space()?;
    let pose = config.common_pose.to_pose()?;
    Ok(fuse(grids, &space, &pose, config.fusion.into())?)
}
