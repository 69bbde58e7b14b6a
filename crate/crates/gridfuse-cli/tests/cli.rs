//! Binary-level tests: exit codes, subcommand plumbing, and artifact
//! formats.

use std::fs;
use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

fn gridfuse() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gridfuse"))
}

fn write_zero_encoder_config(dir: &Path) -> std::path::PathBuf {
    let presets = gridfuse_cli::config::builtin_presets();
    let mut broken = presets.presets["panoramic-hd"].clone();
    broken.encoders.clear();
    let mut file = gridfuse_cli::config::ConfigFile {
        presets: Default::default(),
    };
    file.presets.insert("broken".to_string(), broken);
    let path = dir.join("broken.json");
    fs::write(&path, serde_json::to_string_pretty(&file).unwrap()).unwrap();
    path
}

#[test]
fn zero_encoders_exit_with_config_code() {
    let dir = TempDir::new().unwrap();
    let config = write_zero_encoder_config(dir.path());
    let out = gridfuse()
        .args(["--config"])
        .arg(&config)
        .args(["--preset", "broken", "run", "--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn unknown_preset_exits_with_config_code() {
    let dir = TempDir::new().unwrap();
    let out = gridfuse()
        .args(["--preset", "no-such-preset", "scene", "gen", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_exits_with_input_code() {
    let dir = TempDir::new().unwrap();
    let out = gridfuse()
        .args(["encode", "pointnet", "--cloud"])
        .arg(dir.path().join("nope.bin"))
        .args(["--out"])
        .arg(dir.path().join("out.fgrd"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn corrupt_grid_exits_with_input_code() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.fgrd");
    fs::write(&bad, b"XXXX not a grid").unwrap();
    let out = gridfuse()
        .args(["warp", "--input"])
        .arg(&bad)
        .args(["--out"])
        .arg(dir.path().join("out.fgrd"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn gradcheck_subcommand_passes() {
    let out = gridfuse().args(["gradcheck"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.matches("PASS").count(), 3, "{stdout}");
}

#[test]
fn scene_then_subcommand_chain_matches_pipeline_artifacts() {
    // scene gen -> lidar degrade -> encode pointnet -> occupancy gt/eval ->
    // filter-valid: the individual subcommands compose on disk.
    let dir = TempDir::new().unwrap();
    let scene_dir = dir.path().join("scene");
    let status = gridfuse()
        .args(["--preset", "panoramic-ld", "scene", "gen", "--out"])
        .arg(&scene_dir)
        .status()
        .unwrap();
    assert!(status.success());
    for file in ["boxes.json", "cloud.bin", "manifest.json", "cam_cam0.png"] {
        assert!(scene_dir.join(file).exists(), "missing {file}");
    }

    let degraded = dir.path().join("cloud_ld.bin");
    let status = gridfuse()
        .args(["lidar", "degrade", "--from", "hd", "--to", "ld", "--input"])
        .arg(scene_dir.join("cloud.bin"))
        .args(["--out"])
        .arg(&degraded)
        .status()
        .unwrap();
    assert!(status.success());
    let points = gridfuse::points::read_points_file(&degraded).unwrap();
    assert!(points.len() <= 2340, "degraded cloud has {} points", points.len());

    let grid_path = dir.path().join("pointnet.fgrd");
    let status = gridfuse()
        .args(["--preset", "panoramic-ld", "encode", "pointnet", "--cloud"])
        .arg(&degraded)
        .args(["--out"])
        .arg(&grid_path)
        .status()
        .unwrap();
    assert!(status.success());
    let grid = gridfuse::grid::read_grid_file(&grid_path).unwrap();
    assert_eq!(grid.dims(), [1, 320, 320]);
    assert_eq!(grid.channels(), 64);

    let gt_path = dir.path().join("occupancy.fgrd");
    let status = gridfuse()
        .args(["occupancy", "gt", "--cloud"])
        .arg(scene_dir.join("cloud.bin"))
        .args(["--out"])
        .arg(&gt_path)
        .status()
        .unwrap();
    assert!(status.success());

    let out = gridfuse()
        .args(["occupancy", "eval", "--pred"])
        .arg(&gt_path)
        .args(["--truth"])
        .arg(&gt_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let metrics: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("metrics are JSON");
    assert_eq!(metrics["precision"], 1.0);
    assert_eq!(metrics["recall"], 1.0);
    assert_eq!(metrics["iou"], 1.0);

    let report_path = dir.path().join("valid.json");
    let status = gridfuse()
        .args(["filter-valid", "--cloud"])
        .arg(scene_dir.join("cloud.bin"))
        .args(["--boxes"])
        .arg(scene_dir.join("boxes.json"))
        .args(["--threshold", "0.5", "--out"])
        .arg(&report_path)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report.as_array().unwrap().len(), 6);
}

#[test]
fn warp_and_fuse_round_trip_between_spaces() {
    let dir = TempDir::new().unwrap();
    let scene_dir = dir.path().join("scene");
    assert!(gridfuse()
        .args(["scene", "gen", "--out"])
        .arg(&scene_dir)
        .status()
        .unwrap()
        .success());

    let ray_path = dir.path().join("raycast.fgrd");
    assert!(gridfuse()
        .args(["encode", "raycast", "--images"])
        .arg(&scene_dir)
        .args(["--out"])
        .arg(&ray_path)
        .status()
        .unwrap()
        .success());
    let ray = gridfuse::grid::read_grid_file(&ray_path).unwrap();
    assert_eq!(ray.dims(), [14, 256, 256]);

    let warped_path = dir.path().join("warped.fgrd");
    assert!(gridfuse()
        .args(["warp", "--input"])
        .arg(&ray_path)
        .args(["--out"])
        .arg(&warped_path)
        .status()
        .unwrap()
        .success());
    let warped = gridfuse::grid::read_grid_file(&warped_path).unwrap();
    assert_eq!(warped.dims(), [1, 320, 320]);

    let fused_path = dir.path().join("fused.fgrd");
    assert!(gridfuse()
        .args(["fuse", "--out"])
        .arg(&fused_path)
        .arg(&ray_path)
        .arg(&warped_path)
        .status()
        .unwrap()
        .success());
    let fused = gridfuse::grid::read_grid_file(&fused_path).unwrap();
    assert_eq!(fused.dims(), [1, 320, 320]);
    assert_eq!(fused.channels(), 22);
}

#[test]
fn stereo_encode_consumes_scene_images() {
    let dir = TempDir::new().unwrap();
    let scene_dir = dir.path().join("scene");
    assert!(gridfuse()
        .args(["--preset", "stereo-front", "scene", "gen", "--out"])
        .arg(&scene_dir)
        .status()
        .unwrap()
        .success());

    let cv_path = dir.path().join("cv.fgrd");
    assert!(gridfuse()
        .args(["--preset", "stereo-front", "encode", "stereo-cv", "--left"])
        .arg(scene_dir.join("cam_cam_left.png"))
        .args(["--right"])
        .arg(scene_dir.join("cam_cam_right.png"))
        .args(["--out"])
        .arg(&cv_path)
        .status()
        .unwrap()
        .success());
    let cv = gridfuse::grid::read_grid_file(&cv_path).unwrap();
    assert_eq!(cv.dims(), [48, 72, 120]);
    assert_eq!(cv.channels(), 1);
}
