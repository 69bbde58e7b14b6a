//! Pipeline configuration: a JSON file holding named presets.
//!
//! Poses, spaces, and cameras are serialized as flat key-value maps —
//! rotations as nine row-major floats, translations as three floats, all
//! SI units. The built-in presets `panoramic-hd`, `panoramic-ld`, and
//! `stereo-front` are also shipped as `presets.json` next to this crate;
//! `--config` replaces them with a file of the same schema.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use gridfuse::features::{IdentityFeaturizer, ImageFeaturizer, RandomLinearFeaturizer};
use gridfuse::geometry::{CameraModel, CartesianSpace, Pose, Space};
use gridfuse::lidar::{DetectionProbability, LidarProfile, ValidObjectsParams};
use gridfuse::pointnet::PointNetWeights;
use gridfuse::presets;
use gridfuse::raycast::Reduction;
use gridfuse::stereo::{inverse_depth_planes, CostVolumeMode};

use crate::CliError;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseConfig {
    /// Row-major 3x3 rotation.
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
    pub base_frame: String,
}

impl PoseConfig {
    pub fn identity() -> Self {
        Self::from_pose(&Pose::identity("vehicle"))
    }

    pub fn from_pose(pose: &Pose) -> Self {
        let r = pose.rotation();
        let mut rotation = [0.0; 9];
        for row in 0..3 {
            for col in 0..3 {
                rotation[row * 3 + col] = r[(row, col)];
            }
        }
        let t = pose.translation();
        Self {
            rotation,
            translation: [t.x, t.y, t.z],
            base_frame: pose.base_frame().to_string(),
        }
    }

    pub fn to_pose(&self) -> Result<Pose> {
        let r = &self.rotation;
        let rotation = Matrix3::new(r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8]);
        let translation = Vector3::new(
            self.translation[0],
            self.translation[1],
            self.translation[2],
        );
        Pose::new(rotation, translation, self.base_frame.clone())
            .map_err(|e| CliError::Config(format!("invalid pose: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceConfig {
    Cartesian {
        min_corner: [f64; 3],
        max_corner: [f64; 3],
        cell_size: [f64; 3],
    },
}

impl SpaceConfig {
    pub fn from_cartesian(space: &CartesianSpace) -> Self {
        let v = |x: &Vector3<f64>| [x.x, x.y, x.z];
        SpaceConfig::Cartesian {
            min_corner: v(space.min_corner()),
            max_corner: v(space.max_corner()),
            cell_size: v(space.cell_size()),
        }
    }

    pub fn to_cartesian(&self) -> Result<CartesianSpace> {
        let SpaceConfig::Cartesian {
            min_corner,
            max_corner,
            cell_size,
        } = self;
        CartesianSpace::new(
            Vector3::from_row_slice(min_corner),
            Vector3::from_row_slice(max_corner),
            Vector3::from_row_slice(cell_size),
        )
        .map_err(|e| CliError::Config(format!("invalid space: {e}")))
    }

    pub fn to_space(&self) -> Result<Space> {
        Ok(Space::Cartesian(self.to_cartesian()?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    pub name: String,
    /// (fx, fy) in pixels.
    pub focal: [f64; 2],
    /// (cx, cy) in pixels.
    pub principal_point: [f64; 2],
    /// (rows, cols) in pixels.
    pub image_size: [usize; 2],
    pub pose: PoseConfig,
}

impl CameraConfig {
    pub fn from_camera(name: &str, camera: &CameraModel) -> Self {
        Self {
            name: name.to_string(),
            focal: [camera.focal().0, camera.focal().1],
            principal_point: [camera.principal_point().0, camera.principal_point().1],
            image_size: [camera.image_size().0, camera.image_size().1],
            pose: PoseConfig::from_pose(camera.pose()),
        }
    }

    pub fn to_camera(&self) -> Result<CameraModel> {
        CameraModel::new(
            (self.focal[0], self.focal[1]),
            (self.principal_point[0], self.principal_point[1]),
            (self.image_size[0], self.image_size[1]),
            self.pose.to_pose()?,
        )
        .map_err(|e| CliError::Config(format!("invalid camera {}: {e}", self.name)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionProbabilityConfig {
    pub bucket_edges: Vec<f64>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarProfileConfig {
    pub n_beams: usize,
    pub azimuth_step_deg: f64,
    pub elevation_range_deg: [f64; 2],
    /// Omitted means unit probability everywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_probability: Option<DetectionProbabilityConfig>,
    pub seed: u64,
}

impl LidarProfileConfig {
    pub fn from_profile(profile: &LidarProfile) -> Self {
        let detection = profile.detection();
        let detection_probability = if detection.bucket_edges().is_empty()
            && detection.probabilities() == [1.0]
        {
            None
        } else {
            Some(DetectionProbabilityConfig {
                bucket_edges: detection.bucket_edges().to_vec(),
                probabilities: detection.probabilities().to_vec(),
            })
        };
        Self {
            n_beams: profile.n_beams(),
            azimuth_step_deg: profile.azimuth_step_deg(),
            elevation_range_deg: [
                profile.elevation_range_deg().0,
                profile.elevation_range_deg().1,
            ],
            detection_probability,
            seed: profile.seed(),
        }
    }

    pub fn to_profile(&self) -> Result<LidarProfile> {
        let detection = match &self.detection_probability {
            None => DetectionProbability::always(),
            Some(t) => DetectionProbability::from_table(
                t.bucket_edges.clone(),
                t.probabilities.clone(),
            )
            .map_err(|e| CliError::Config(format!("invalid detection table: {e}")))?,
        };
        LidarProfile::new(
            self.n_beams,
            self.azimuth_step_deg,
            (self.elevation_range_deg[0], self.elevation_range_deg[1]),
            detection,
            self.seed,
        )
        .map_err(|e| CliError::Config(format!("invalid lidar profile: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarSection {
    pub sensor_pose: PoseConfig,
    pub profiles: BTreeMap<String, LidarProfileConfig>,
    /// Which profile feeds the pipeline; a profile other than "hd" is
    /// produced by degrading the hd scan.
    pub active: String,
}

impl LidarSection {
    pub fn profile(&self, name: &str) -> Result<LidarProfile> {
        self.profiles
            .get(name)
            .ok_or_else(|| CliError::Config(format!("unknown lidar profile \"{name}\"")))?
            .to_profile()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub num_boxes: usize,
    pub ground: bool,
    pub ground_height: f64,
    /// Box spawn annulus (meters from the origin).
    pub spawn_range: [f64; 2],
    /// Box spawn sector, degrees from vehicle +X.
    pub azimuth_range_deg: [f64; 2],
    pub box_size_min: [f64; 3],
    pub box_size_max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FeaturizerConfig {
    Identity { stride: usize },
    RandomLinear { channels: usize, stride: usize, seed: u64 },
}

impl FeaturizerConfig {
    pub fn build(&self) -> Box<dyn ImageFeaturizer> {
        match *self {
            FeaturizerConfig::Identity { stride } => Box::new(IdentityFeaturizer { stride }),
            FeaturizerConfig::RandomLinear {
                channels,
                stride,
                seed,
            } => Box::new(RandomLinearFeaturizer {
                out_channels: channels,
                stride,
                seed,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionConfig {
    Mean,
    Sum,
}

impl From<ReductionConfig> for Reduction {
    fn from(r: ReductionConfig) -> Self {
        match r {
            ReductionConfig::Mean => Reduction::Mean,
            ReductionConfig::Sum => Reduction::Sum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostModeConfig {
    Correlation,
    Concat,
}

impl From<CostModeConfig> for CostVolumeMode {
    fn from(m: CostModeConfig) -> Self {
        match m {
            CostModeConfig::Correlation => CostVolumeMode::Correlation,
            CostModeConfig::Concat => CostVolumeMode::Concat,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanesConfig {
    pub near: f64,
    pub far: f64,
    pub count: usize,
}

impl PlanesConfig {
    pub fn to_planes(&self) -> Result<Vec<f64>> {
        inverse_depth_planes(self.near, self.far, self.count)
            .map_err(|e| CliError::Config(format!("invalid depth planes: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EncoderConfig {
    Pointnet {
        space: SpaceConfig,
        pose: PoseConfig,
        hidden: usize,
        embed: usize,
        weight_seed: u64,
    },
    Raycast {
        space: SpaceConfig,
        pose: PoseConfig,
        cameras: Vec<String>,
        reduction: ReductionConfig,
    },
    StereoCv {
        left: String,
        right: String,
        planes: PlanesConfig,
        mode: CostModeConfig,
    },
}

impl EncoderConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            EncoderConfig::Pointnet { .. } => "pointnet",
            EncoderConfig::Raycast { .. } => "raycast",
            EncoderConfig::StereoCv { .. } => "stereo-cv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadConfig {
    pub name: String,
    pub space: SpaceConfig,
    pub pose: PoseConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FusionModeConfig {
    Concat,
    Sum,
}

impl From<FusionModeConfig> for gridfuse::fusion::FusionMode {
    fn from(m: FusionModeConfig) -> Self {
        match m {
            FusionModeConfig::Concat => gridfuse::fusion::FusionMode::Concat,
            FusionModeConfig::Sum => gridfuse::fusion::FusionMode::Sum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidObjectsConfig {
    pub threshold: f64,
    pub occlusion_slack: f64,
    pub sample_spacing: f64,
}

impl Default for ValidObjectsConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            occlusion_slack: 0.5,
            sample_spacing: 0.2,
        }
    }
}

impl ValidObjectsConfig {
    pub fn params(&self) -> ValidObjectsParams {
        ValidObjectsParams {
            occlusion_slack: self.occlusion_slack,
            sample_spacing: self.sample_spacing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpTargetConfig {
    pub space: SpaceConfig,
    pub pose: PoseConfig,
}

fn default_occupancy_threshold() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub scene: SceneConfig,
    pub cameras: Vec<CameraConfig>,
    pub lidar: LidarSection,
    pub featurizer: FeaturizerConfig,
    pub encoders: Vec<EncoderConfig>,
    pub common_space: SpaceConfig,
    pub common_pose: PoseConfig,
    pub fusion: FusionModeConfig,
    pub heads: Vec<HeadConfig>,
    /// Target of the `warp` subcommand; defaults to the common space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warp_target: Option<WarpTargetConfig>,
    /// Lattice for occupancy ground truth; defaults to the common space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupancy_space: Option<SpaceConfig>,
    #[serde(default = "default_occupancy_threshold")]
    pub occupancy_threshold: f64,
    #[serde(default)]
    pub valid_objects: ValidObjectsConfig,
}

impl PipelineConfig {
    pub fn camera(&self, name: &str) -> Result<&CameraConfig> {
        self.cameras
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| CliError::Config(format!("unknown camera \"{name}\"")))
    }

    pub fn pointnet_weights(&self, hidden: usize, embed: usize, weight_seed: u64) -> PointNetWeights {
        PointNetWeights::seeded(hidden, embed, weight_seed)
    }

    pub fn first_encoder(&self, kind: &str) -> Result<&EncoderConfig> {
        self.encoders
            .iter()
            .find(|e| e.kind() == kind)
            .ok_or_else(|| {
                CliError::Config(format!("config declares no \"{kind}\" encoder"))
            })
    }

    pub fn occupancy_space(&self) -> Result<CartesianSpace> {
        match &self.occupancy_space {
            Some(s) => s.to_cartesian(),
            None => self.common_space.to_cartesian(),
        }
    }
}

/// A config file: named pipeline presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigFile {
    pub presets: BTreeMap<String, PipelineConfig>,
}

pub const DEFAULT_PRESET: &str = "panoramic-hd";

/// Resolves the pipeline config from an optional file, preset name, and
/// seed override. Without a file, the built-in presets apply.
pub fn load(
    config_path: Option<&Path>,
    preset: Option<&str>,
    seed: Option<u64>,
) -> Result<PipelineConfig> {
    let file = match config_path {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<ConfigFile>(&text)
                .map_err(|e| CliError::Config(format!("cannot parse {}: {e}", path.display())))?
        }
        None => builtin_presets(),
    };
    let name = preset.unwrap_or(DEFAULT_PRESET);
    let mut config = file
        .presets
        .get(name)
        .ok_or_else(|| {
            let known: Vec<&String> = file.presets.keys().collect();
            CliError::Config(format!("unknown preset \"{name}\"; available: {known:?}"))
        })?
        .clone();
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

/// The built-in presets. `panoramic-hd` fuses a PointNet LiDAR encoder with
/// a six-camera raycast uplift in the LiDAR encoder's space; `panoramic-ld`
/// is the same rig with the scan degraded to the low-density profile;
/// `stereo-front` builds a plane-sweep cost volume from a forward stereo
/// pair and fuses it into the forward Cartesian lattice.
pub fn builtin_presets() -> ConfigFile {
    let lidar_space = SpaceConfig::from_cartesian(&presets::panoramic_lidar_space());
    let raycast_space = SpaceConfig::from_cartesian(&presets::panoramic_raycast_space());
    let stereo_space = SpaceConfig::from_cartesian(&presets::stereo_cartesian_space());
    let identity = PoseConfig::identity();

    let ring = presets::camera_ring(6, (192, 320), 80.0, 2.0);
    let ring_configs: Vec<CameraConfig> = ring
        .iter()
        .enumerate()
        .map(|(k, cam)| CameraConfig::from_camera(&format!("cam{k}"), cam))
        .collect();
    let ring_names: Vec<String> = ring_configs.iter().map(|c| c.name.clone()).collect();

    let mut profiles = BTreeMap::new();
    profiles.insert(
        "hd".to_string(),
        LidarProfileConfig::from_profile(&presets::hd_profile(11)),
    );
    profiles.insert(
        "ld".to_string(),
        LidarProfileConfig::from_profile(&presets::ld_profile(13)),
    );

    let panoramic_scene = SceneConfig {
        num_boxes: 6,
        ground: true,
        ground_height: 0.0,
        spawn_range: [8.0, 35.0],
        azimuth_range_deg: [0.0, 360.0],
        box_size_min: [3.5, 1.6, 1.4],
        box_size_max: [5.5, 2.2, 2.0],
    };
    let sensor_pose = PoseConfig {
        rotation: PoseConfig::identity().rotation,
        translation: [0.0, 0.0, 2.0],
        base_frame: "vehicle".to_string(),
    };

    let panoramic = |active: &str| PipelineConfig {
        seed: 7,
        scene: panoramic_scene.clone(),
        cameras: ring_configs.clone(),
        lidar: LidarSection {
            sensor_pose: sensor_pose.clone(),
            profiles: profiles.clone(),
            active: active.to_string(),
        },
        featurizer: FeaturizerConfig::RandomLinear {
            channels: 8,
            stride: 4,
            seed: 17,
        },
        encoders: vec![
            EncoderConfig::Pointnet {
                space: lidar_space.clone(),
                pose: identity.clone(),
                hidden: 32,
                embed: 64,
                weight_seed: 23,
            },
            EncoderConfig::Raycast {
                space: raycast_space.clone(),
                pose: identity.clone(),
                cameras: ring_names.clone(),
                reduction: ReductionConfig::Mean,
            },
        ],
        common_space: lidar_space.clone(),
        common_pose: identity.clone(),
        fusion: FusionModeConfig::Concat,
        heads: vec![HeadConfig {
            name: "detect".to_string(),
            space: lidar_space.clone(),
            pose: identity.clone(),
        }],
        warp_target: Some(WarpTargetConfig {
            space: lidar_space.clone(),
            pose: identity.clone(),
        }),
        occupancy_space: Some(lidar_space.clone()),
        occupancy_threshold: 0.5,
        valid_objects: ValidObjectsConfig::default(),
    };

    let (left, right) = presets::stereo_pair((144, 240), 65.0, 0.356, 1.5);
    let stereo = PipelineConfig {
        seed: 7,
        scene: SceneConfig {
            num_boxes: 5,
            ground: true,
            ground_height: 0.0,
            spawn_range: [8.0, 45.0],
            azimuth_range_deg: [-25.0, 25.0],
            box_size_min: [3.5, 1.6, 1.4],
            box_size_max: [5.5, 2.2, 2.0],
        },
        cameras: vec![
            CameraConfig::from_camera("cam_left", &left),
            CameraConfig::from_camera("cam_right", &right),
        ],
        lidar: LidarSection {
            sensor_pose: sensor_pose.clone(),
            profiles: profiles.clone(),
            active: "hd".to_string(),
        },
        featurizer: FeaturizerConfig::RandomLinear {
            channels: 8,
            stride: 2,
            seed: 17,
        },
        encoders: vec![EncoderConfig::StereoCv {
            left: "cam_left".to_string(),
            right: "cam_right".to_string(),
            planes: PlanesConfig {
                near: 2.0,
                far: 60.0,
                count: 48,
            },
            mode: CostModeConfig::Correlation,
        }],
        common_space: stereo_space.clone(),
        common_pose: identity.clone(),
        fusion: FusionModeConfig::Concat,
        heads: vec![HeadConfig {
            name: "detect".to_string(),
            space: stereo_space.clone(),
            pose: identity.clone(),
        }],
        warp_target: Some(WarpTargetConfig {
            space: stereo_space,
            pose: identity.clone(),
        }),
        occupancy_space: None,
        occupancy_threshold: 0.5,
        valid_objects: ValidObjectsConfig::default(),
    };

    let mut file = ConfigFile {
        presets: BTreeMap::new(),
    };
    file.presets.insert("panoramic-hd".to_string(), panoramic("hd"));
    file.presets.insert("panoramic-ld".to_string(), panoramic("ld"));
    file.presets.insert("stereo-front".to_string(), stereo);
    file
}
