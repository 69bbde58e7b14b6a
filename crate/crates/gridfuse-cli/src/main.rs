use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gridfuse::fusion::{occupancy_ground_truth, occupancy_metrics};
use gridfuse::gradcheck::check_all;
use gridfuse::grid::{read_grid_file, write_grid_file};
use gridfuse::lidar::{degrade, synth_scan, valid_objects, Scene};
use gridfuse::points::{read_points_file, write_points_file, PointCloud};
use gridfuse::warp::space_warp;

use gridfuse_cli::config::{self, EncoderConfig, PipelineConfig};
use gridfuse_cli::{pipeline, scene, CliError};

#[derive(Parser)]
#[command(
    name = "gridfuse",
    version,
    about = "Geometric sensor-fusion engine: synthetic scenes, grid encoders, cross-space warps, and verification suites"
)]
struct Cli {
    /// JSON config file holding named presets; built-ins apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Preset name inside the config (panoramic-hd, panoramic-ld, stereo-front).
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Overrides the preset's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic scene tooling.
    Scene {
        #[command(subcommand)]
        command: SceneCommand,
    },
    /// LiDAR scan synthesis and density degradation.
    Lidar {
        #[command(subcommand)]
        command: LidarCommand,
    },
    /// Sensor encoders producing FGRD grids.
    Encode {
        #[command(subcommand)]
        command: EncodeCommand,
    },
    /// Resamples an FGRD grid into the configured target space.
    Warp {
        /// Source FGRD file.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Warps FGRD grids to the common space and combines them.
    Fuse {
        #[arg(long)]
        out: PathBuf,
        /// Input FGRD files, fused in order.
        inputs: Vec<PathBuf>,
    },
    /// Occupancy ground truth and evaluation.
    Occupancy {
        #[command(subcommand)]
        command: OccupancyCommand,
    },
    /// Scores annotation boxes by range-image visibility.
    FilterValid {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        boxes: PathBuf,
        /// Visibility fraction required for a box to count as valid.
        #[arg(long)]
        threshold: Option<f64>,
        /// Report file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verifies analytic gradients against central finite differences.
    Gradcheck,
    /// Runs the full pipeline: scene, encoders, fusion, heads, summary.
    Run {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum SceneCommand {
    /// Writes boxes, camera renders, a LiDAR scan, and a manifest.
    Gen {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum LidarCommand {
    /// Traces a scan of the configured scene.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Profile name from the config (default "hd").
        #[arg(long)]
        profile: Option<String>,
        /// Boxes JSON; the configured random scene when omitted.
        #[arg(long)]
        boxes: Option<PathBuf>,
    },
    /// Thins a scan from one profile to another.
    Degrade {
        /// Source profile name.
        #[arg(long)]
        from: String,
        /// Target profile name.
        #[arg(long)]
        to: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum EncodeCommand {
    /// Uplifts camera images into a voxel grid.
    Raycast {
        /// Directory holding cam_<name>.png (or .bin) images.
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Voxelizes a point cloud into per-voxel embeddings.
    Pointnet {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Builds a plane-sweep cost volume from a stereo pair.
    StereoCv {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum OccupancyCommand {
    /// Binary occupancy grid of a point cloud.
    Gt {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Precision/recall/IoU of a probability grid against a binary grid.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
    },
}

#[derive(Args)]
struct Empty {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gridfuse: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let config = config::load(cli.config.as_deref(), cli.preset.as_deref(), cli.seed)?;
    match &cli.command {
        Command::Scene {
            command: SceneCommand::Gen { out },
        } => {
            let generated = scene::generate(&config, config.seed)?;
            let manifest = scene::write_scene(out, &generated, config.seed)?;
            println!(
                "wrote scene with {} boxes, {} points, {} images to {}",
                generated.scene.boxes.len(),
                generated.cloud.len(),
                generated.images.len(),
                out.display()
            );
            for (file, sha) in &manifest.files {
                println!("  {file} {sha}");
            }
            Ok(())
        }

        Command::Lidar { command } => lidar_command(&config, command),
        Command::Encode { command } => encode_command(&config, command),

        Command::Warp { input, out } => {
            let grid = read_grid_file(input)?;
            let target = config
                .warp_target
                .clone()
                .map(|t| Ok::<_, CliError>((t.space.to_space()?, t.pose.to_pose()?)))
                .unwrap_or_else(|| {
                    Ok((config.common_space.to_space()?, config.common_pose.to_pose()?))
                })?;
            let warped = space_warp(&grid, &target.0, &target.1)?;
            write_grid_file(&warped, out)?;
            println!("warped {:?} -> {:?}", grid.shape(), warped.shape());
            Ok(())
        }

        Command::Fuse { out, inputs } => {
            if inputs.is_empty() {
                return Err(CliError::Config("fuse needs at least one input".into()));
            }
            let grids = inputs
                .iter()
                .map(|p| Ok(read_grid_file(p)?))
                .collect::<Result<Vec<_>, CliError>>()?;
            let fused = pipeline::fuse_grids(&config, &grids)?;
            write_grid_file(&fused, out)?;
            println!("fused {} grids -> {:?}", grids.len(), fused.shape());
            Ok(())
        }

        Command::Occupancy { command } => occupancy_command(&config, command),

        Command::FilterValid {
            cloud,
            boxes,
            threshold,
            out,
        } => {
            let points = read_points_file(cloud)?;
            let pose = config.lidar.sensor_pose.to_pose()?;
            let cloud = PointCloud::new(points, pose);
            let boxes = scene::read_boxes(boxes)?;
            let profile = config.lidar.profile(&config.lidar.active)?;
            let threshold = threshold.unwrap_or(config.valid_objects.threshold);
            let report = valid_objects(
                &cloud,
                &boxes,
                &profile,
                threshold,
                &config.valid_objects.params(),
            )?;
            let rows: Vec<serde_json::Value> = report
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "id": r.id,
                        "visible_fraction": r.visible_fraction,
                        "is_valid": r.is_valid,
                    })
                })
                .collect();
            let text = serde_json::to_string_pretty(&rows).unwrap();
            match out {
                Some(path) => std::fs::write(path, text)
                    .map_err(|e| CliError::Input(format!("cannot write report: {e}")))?,
                None => println!("{text}"),
            }
            Ok(())
        }

        Command::Gradcheck => {
            let mut failed = false;
            for report in check_all(config.seed)? {
                let verdict = if report.passed() { "PASS" } else { "FAIL" };
                println!(
                    "{verdict} {}: max relative error {:.3e} (tolerance {:.1e}, {} entries)",
                    report.op, report.max_rel_err, report.tolerance, report.entries
                );
                failed |= !report.passed();
            }
            if failed {
                return Err(CliError::Numerical(
                    "analytic gradients disagree with finite differences".into(),
                ));
            }
            Ok(())
        }

        Command::Run { out } => {
            let summary = pipeline::run(&config, out)?;
            println!("pipeline complete; summary at {}", out.join("summary.json").display());
            for (name, grid) in &summary.grids {
                println!("  {name}: shape {:?} sha256 {}", grid.shape, grid.sha256);
            }
            Ok(())
        }
    }
}

fn lidar_command(config: &PipelineConfig, command: &LidarCommand) -> Result<(), CliError> {
    match command {
        LidarCommand::Synth {
            out,
            profile,
            boxes,
        } => {
            let profile_name = profile.as_deref().unwrap_or("hd");
            let profile = config.lidar.profile(profile_name)?;
            let boxes = match boxes {
                Some(path) => scene::read_boxes(path)?,
                None => scene::generate_boxes(&config.scene, config.seed),
            };
            let scene = Scene {
                boxes,
                ground_height: config.scene.ground.then_some(config.scene.ground_height),
            };
            let cloud = synth_scan(&scene, &profile, &config.lidar.sensor_pose.to_pose()?);
            write_points_file(&cloud.points, out)?;
            println!("wrote {} points to {}", cloud.len(), out.display());
            Ok(())
        }
        LidarCommand::Degrade {
            from,
            to,
            input,
            out,
        } => {
            let from = config.lidar.profile(from)?;
            let to = config.lidar.profile(to)?;
            let points = read_points_file(input)?;
            let pose = config.lidar.sensor_pose.to_pose()?;
            let degraded = degrade(&PointCloud::new(points, pose), &from, &to)?;
            write_points_file(&degraded.points, out)?;
            println!("kept {} points", degraded.len());
            Ok(())
        }
    }
}

fn encode_command(config: &PipelineConfig, command: &EncodeCommand) -> Result<(), CliError> {
    match command {
        EncodeCommand::Raycast { images, out } => {
            let encoder = config.first_encoder("raycast")?.clone();
            let EncoderConfig::Raycast { cameras, .. } = &encoder else {
                unreachable!()
            };
            let mut rendered = std::collections::BTreeMap::new();
            for name in cameras {
                let png = scene::camera_image_path(images, name);
                let path = if png.exists() {
                    png
                } else {
                    images.join(format!("cam_{name}.bin"))
                };
                rendered.insert(name.clone(), scene::read_image(&path)?);
            }
            let cloud = PointCloud::new(vec![], config.lidar.sensor_pose.to_pose()?);
            let grid = pipeline::run_encoder(config, &encoder, &cloud, &rendered)?;
            write_grid_file(&grid, out)?;
            println!("raycast grid {:?} -> {}", grid.shape(), out.display());
            Ok(())
        }
        EncodeCommand::Pointnet { cloud, out } => {
            let encoder = config.first_encoder("pointnet")?.clone();
            let points = read_points_file(cloud)?;
            let cloud = PointCloud::new(points, config.lidar.sensor_pose.to_pose()?);
            let grid =
                pipeline::run_encoder(config, &encoder, &cloud, &Default::default())?;
            write_grid_file(&grid, out)?;
            println!("pointnet grid {:?} -> {}", grid.shape(), out.display());
            Ok(())
        }
        EncodeCommand::StereoCv { left, right, out } => {
            let encoder = config.first_encoder("stereo-cv")?.clone();
            let EncoderConfig::StereoCv {
                left: left_name,
                right: right_name,
                ..
            } = &encoder
            else {
                unreachable!()
            };
            let mut rendered = std::collections::BTreeMap::new();
            rendered.insert(left_name.clone(), scene::read_image(left)?);
            rendered.insert(right_name.clone(), scene::read_image(right)?);
            let cloud = PointCloud::new(vec![], config.lidar.sensor_pose.to_pose()?);
            let grid = pipeline::run_encoder(config, &encoder, &cloud, &rendered)?;
            write_grid_file(&grid, out)?;
            println!("cost volume {:?} -> {}", grid.shape(), out.display());
            Ok(())
        }
    }
}

fn occupancy_command(config: &PipelineConfig, command: &OccupancyCommand) -> Result<(), CliError> {
    match command {
        OccupancyCommand::Gt { cloud, out } => {
            let points = read_points_file(cloud)?;
            let pose = config.lidar.sensor_pose.to_pose()?;
            let space = config.occupancy_space()?;
            let grid = occupancy_ground_truth(
                &PointCloud::new(points, pose),
                &space,
                &config.common_pose.to_pose()?,
            );
            write_grid_file(&grid, out)?;
            println!("occupancy grid {:?} -> {}", grid.shape(), out.display());
            Ok(())
        }
        OccupancyCommand::Eval {
            pred,
            truth,
            threshold,
        } => {
            let pred = read_grid_file(pred)?;
            let truth = read_grid_file(truth)?;
            let threshold = threshold.unwrap_or(config.occupancy_threshold);
            let m = occupancy_metrics(&pred, &truth, threshold)?;
            println!(
                "{}",
                serde_json::json!({
                    "threshold": m.threshold,
                    "precision": m.precision,
                    "recall": m.recall,
                    "iou": m.iou,
                    "true_positives": m.true_positives,
                    "false_positives": m.false_positives,
                    "false_negatives": m.false_negatives,
                })
            );
            Ok(())
        }
    }
}
