//! Synthetic LiDAR scans, density degradation, and occlusion filtering.
//!
//! A scan is one ray per (beam, azimuth) cell of the profile's angular
//! raster; the first ray-box or ray-ground intersection becomes a return.
//! Degradation reproduces a low-density sensor from a high-density scan by
//! vertical beam sub-sampling, azimuth sub-sampling, and a range-dependent
//! probability-of-detection draw. The validity filter builds a
//! (beam x azimuth) range image and scores each annotation box by the
//! fraction of its sensor-facing surface that survives occlusion.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::points::{LidarPoint, PointCloud};

/// Probability of detection as a piecewise-constant function of range.
///
/// `bucket_edges` are ascending range boundaries (meters); `probabilities`
/// has one more entry than edges and covers (-inf, e0), [e0, e1), ...,
/// [en, inf).
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionProbability {
    bucket_edges: Vec<f64>,
    probabilities: Vec<f64>,
}

impl DetectionProbability {
    /// Unit probability everywhere: every surviving point is kept.
    pub fn always() -> Self {
        Self {
            bucket_edges: vec![],
            probabilities: vec![1.0],
        }
    }

    pub fn from_table(bucket_edges: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != bucket_edges.len() + 1 {
            return Err(Error::invalid(
                "detection probability table",
                "need exactly one more probability than bucket edges",
            ));
        }
        if bucket_edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "detection probability table",
                "bucket edges must be strictly increasing",
            ));
        }
        if probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid(
                "detection probability table",
                "probabilities must lie in [0, 1]",
            ));
        }
        Ok(Self {
            bucket_edges,
            probabilities,
        })
    }

    pub fn at(&self, range: f64) -> f64 {
        let bucket = self.bucket_edges.partition_point(|&e| e <= range);
        self.probabilities[bucket]
    }

    pub fn bucket_edges(&self) -> &[f64] {
        &self.bucket_edges
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }
}

/// Angular raster and detection behavior of one LiDAR unit.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarProfile {
    n_beams: usize,
    azimuth_step_deg: f64,
    elevation_range_deg: (f64, f64),
    detection: DetectionProbability,
    seed: u64,
}

impl LidarProfile {
    pub fn new(
        n_beams: usize,
        azimuth_step_deg: f64,
        elevation_range_deg: (f64, f64),
        detection: DetectionProbability,
        seed: u64,
    ) -> Result<Self> {
        if n_beams == 0 {
            return Err(Error::invalid("lidar profile", "need at least one beam"));
        }
        let cells = 360.0 / azimuth_step_deg;
        if !(azimuth_step_deg > 0.0) || (cells - cells.round()).abs() > 1e-9 {
            return Err(Error::invalid(
                "lidar profile",
                format!("azimuth step {azimuth_step_deg} does not divide 360"),
            ));
        }
        if elevation_range_deg.1 < elevation_range_deg.0 {
            return Err(Error::invalid(
                "lidar profile",
                "elevation range is inverted",
            ));
        }
        Ok(Self {
            n_beams,
            azimuth_step_deg,
            elevation_range_deg,
            detection,
            seed,
        })
    }

    pub fn n_beams(&self) -> usize {
        self.n_beams
    }

    pub fn azimuth_step_deg(&self) -> f64 {
        self.azimuth_step_deg
    }

    pub fn elevation_range_deg(&self) -> (f64, f64) {
        self.elevation_range_deg
    }

    pub fn detection(&self) -> &DetectionProbability {
        &self.detection
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Azimuth cells per revolution.
    pub fn azimuth_cells(&self) -> usize {
        (360.0 / self.azimuth_step_deg).round() as usize
    }

    /// Upper bound on returns per scan: one per raster cell.
    pub fn max_points_per_scan(&self) -> usize {
        self.n_beams * self.azimuth_cells()
    }

    /// Elevation of one beam, degrees; beams span the range evenly.
    pub fn beam_elevation_deg(&self, beam: usize) -> f64 {
        let (lo, hi) = self.elevation_range_deg;
        if self.n_beams == 1 {
            lo
        } else {
            lo + beam as f64 * (hi - lo) / (self.n_beams - 1) as f64
        }
    }
}

/// An upright annotation box: center, size (full extents), yaw about +Z.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxAnnotation {
    pub center: Vector3<f64>,
    pub size: Vector3<f64>,
    pub yaw: f64,
    pub id: u32,
}

impl BoxAnnotation {
    pub fn new(center: Vector3<f64>, size: Vector3<f64>, yaw: f64, id: u32) -> Result<Self> {
        if size.iter().any(|&s| s <= 0.0) {
            return Err(Error::invalid(
                "box annotation",
                format!("size {size:?} has a non-positive extent"),
            ));
        }
        Ok(Self {
            center,
            size,
            yaw,
            id,
        })
    }
}

/// Geometry a scan is traced against: boxes plus an optional ground plane
/// at a fixed height.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub boxes: Vec<BoxAnnotation>,
    pub ground_height: Option<f64>,
}

/// Visibility verdict for one annotation box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxVisibility {
    pub id: u32,
    pub visible_fraction: f64,
    pub is_valid: bool,
}

/// Tunables for [`valid_objects`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidObjectsParams {
    /// A sample survives if its range is within this slack of the range
    /// image cell, meters.
    pub occlusion_slack: f64,
    /// Spacing of surface samples on box faces, meters.
    pub sample_spacing: f64,
}

impl Default for ValidObjectsParams {
    fn default() -> Self {
        Self {
            occlusion_slack: 0.5,
            sample_spacing: 0.2,
        }
    }
}

const MIN_RAY_T: f64 = 0.05;

fn yaw_rotation(yaw: f64) -> Matrix3<f64> {
    let (s, c) = yaw.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Distance along `dir` to the first intersection with an oriented box, if
/// any; hits closer than the sensor's minimum range are pushed out to it.
pub fn ray_box_intersection(
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
    b: &BoxAnnotation,
) -> Option<f64> {
    let rot_inv = yaw_rotation(-b.yaw);
    let o = rot_inv * (origin - b.center);
    let d = rot_inv * dir;
    let half = b.size / 2.0;
    let mut t0 = MIN_RAY_T;
    let mut t1 = f64::INFINITY;
    for axis in 0..3 {
        if d[axis].abs() < 1e-12 {
            if o[axis].abs() > half[axis] {
                return None;
            }
            continue;
        }
        let mut ta = (-half[axis] - o[axis]) / d[axis];
        let mut tb = (half[axis] - o[axis]) / d[axis];
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return None;
        }
    }
    Some(t0)
}

/// Traces one ray per (beam, azimuth) raster cell and keeps the nearest
/// surface hit. Returned points are in the sensor frame; the cloud carries
/// `sensor_pose`. Misses produce no point, so the scan never exceeds
/// `n_beams * azimuth_cells` returns.
pub fn synth_scan(scene: &Scene, profile: &LidarProfile, sensor_pose: &Pose) -> PointCloud {
    let origin = *sensor_pose.translation();
    let rotation = *sensor_pose.rotation();
    let n_az = profile.azimuth_cells();
    let mut points = Vec::new();

    for beam in 0..profile.n_beams {
        let elev = profile.beam_elevation_deg(beam).to_radians();
        let (sin_e, cos_e) = elev.sin_cos();
        for az_idx in 0..n_az {
            let az = (az_idx as f64 * profile.azimuth_step_deg).to_radians();
            let (sin_a, cos_a) = az.sin_cos();
            let dir_sensor = Vector3::new(cos_e * cos_a, cos_e * sin_a, sin_e);
            let dir_world = rotation * dir_sensor;

            let mut best: Option<(f64, f32)> = None;
            for b in &scene.boxes {
                if let Some(t) = ray_box_intersection(&origin, &dir_world, b) {
                    if best.map_or(true, |(bt, _)| t < bt) {
                        best = Some((t, 0.8));
                    }
                }
            }
            if let Some(h) = scene.ground_height {
                if dir_world.z.abs() > 1e-12 {
                    let t = (h - origin.z) / dir_world.z;
                    if t > MIN_RAY_T && best.map_or(true, |(bt, _)| t < bt) {
                        best = Some((t, 0.3));
                    }
                }
            }

            if let Some((t, intensity)) = best {
                let p = dir_sensor * t;
                points.push(LidarPoint {
                    x: p.x as f32,
                    y: p.y as f32,
                    z: p.z as f32,
                    intensity,
                    beam: beam as u16,
                    azimuth: az_idx as u16,
                });
            }
        }
    }
    PointCloud::new(points, sensor_pose.clone())
}

/// Beams of the source raster kept when thinning to `n_to` beams: evenly
/// spread over the elevation range.
pub fn beam_subset(n_from: usize, n_to: usize) -> Vec<usize> {
    if n_to == 1 {
        return vec![0];
    }
    (0..n_to)
        .map(|i| ((i * (n_from - 1)) as f64 / (n_to - 1) as f64).round() as usize)
        .collect()
}

/// SplitMix64-style counter draw in [0, 1), keyed by (seed, index): the
/// keep decision for a point depends only on the seed and the point's
/// position in the input, never on iteration order.
fn detection_draw(seed: u64, index: u64) -> f64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Thins a scan from one profile to a sparser one: keeps points whose beam
/// index is in the evenly-spread subset and whose azimuth index is 0 mod
/// the step ratio, then applies the target's probability-of-detection draw.
/// Surviving points are copied verbatim (original beam/azimuth indices
/// included), so the output is always a subset of the input and repeating
/// the same degradation is the identity when detection probability is 1.
pub fn degrade(cloud: &PointCloud, from: &LidarProfile, to: &LidarProfile) -> Result<PointCloud> {
    if to.n_beams > from.n_beams {
        return Err(Error::IncompatibleProfiles(format!(
            "target has {} beams, source only {}",
            to.n_beams, from.n_beams
        )));
    }
    let ratio = to.azimuth_step_deg / from.azimuth_step_deg;
    if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 - 1e-9 {
        return Err(Error::IncompatibleProfiles(format!(
            "azimuth step {} is not an integer multiple of {}",
            to.azimuth_step_deg, from.azimuth_step_deg
        )));
    }
    let factor = ratio.round() as u16;

    let mut keep_beam = vec![false; from.n_beams];
    for b in beam_subset(from.n_beams, to.n_beams) {
        keep_beam[b] = true;
    }

    let points = cloud
        .points
        .iter()
        .enumerate()
        .filter(|(index, p)| {
            (p.beam as usize) < from.n_beams
                && keep_beam[p.beam as usize]
                && p.azimuth % factor == 0
                && detection_draw(to.seed, *index as u64) < to.detection.at(p.range())
        })
        .map(|(_, p)| *p)
        .collect();
    Ok(PointCloud::new(points, cloud.pose.clone()))
}

/// Minimum return range per (beam, azimuth) raster cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeImage {
    n_beams: usize,
    n_azimuth: usize,
    cells: Vec<Option<f64>>,
}

impl RangeImage {
    pub fn cell(&self, beam: usize, azimuth: usize) -> Option<f64> {
        self.cells[beam * self.n_azimuth + azimuth]
    }
}

/// Builds the (beam x azimuth) range image of a cloud under a profile.
/// Points whose beam index falls outside the profile raster are ignored.
pub fn build_range_image(cloud: &PointCloud, profile: &LidarProfile) -> RangeImage {
    let n_beams = profile.n_beams;
    let n_azimuth = profile.azimuth_cells();
    let mut cells = vec![None; n_beams * n_azimuth];
    for p in &cloud.points {
        let beam = p.beam as usize;
        if beam >= n_beams {
            continue;
        }
        let az = p.azimuth as usize % n_azimuth;
        let slot = &mut cells[beam * n_azimuth + az];
        let range = p.range();
        if slot.map_or(true, |r| range < r) {
            *slot = Some(range);
        }
    }
    RangeImage {
        n_beams,
        n_azimuth,
        cells,
    }
}

/// Scores each box by the fraction of its sensor-facing surface visible in
/// the cloud's range image; a box is valid when the fraction reaches
/// `threshold`.
///
/// Samples are taken on the sensor-facing faces at `sample_spacing` and
/// projected into the profile's angular raster from the LiDAR origin. A
/// sample is visible when its raster cell is empty or its range is within
/// `occlusion_slack` of the cell's range; samples outside the vertical
/// field of view count as not visible.
pub fn valid_objects(
    cloud: &PointCloud,
    boxes: &[BoxAnnotation],
    profile: &LidarProfile,
    threshold: f64,
    params: &ValidObjectsParams,
) -> Result<Vec<BoxVisibility>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(
            "visibility threshold",
            format!("{threshold} outside [0, 1]"),
        ));
    }
    let image = build_range_image(cloud, profile);
    let sensor_origin = *cloud.pose.translation();
    let to_sensor = cloud.pose.inverse();
    let (elev_lo, elev_hi) = profile.elevation_range_deg;
    let beam_step = if profile.n_beams == 1 {
        profile.azimuth_step_deg
    } else {
        (elev_hi - elev_lo) / (profile.n_beams - 1) as f64
    };
    let n_azimuth = profile.azimuth_cells();

    let mut out = Vec::with_capacity(boxes.len());
    for b in boxes {
        let rot = yaw_rotation(b.yaw);
        let half = b.size / 2.0;
        let mut total = 0usize;
        let mut visible = 0usize;

        // axis = face normal direction in the box frame; (ua, va) span it.
        for (axis, ua, va) in [(0usize, 1usize, 2usize), (1, 0, 2), (2, 0, 1)] {
            for sign in [-1.0f64, 1.0] {
                let mut normal_local = Vector3::zeros();
                normal_local[axis] = sign;
                let normal = rot * normal_local;
                let face_center = b.center + normal * half[axis];
                if normal.dot(&(sensor_origin - face_center)) <= 0.0 {
                    continue;
                }
                let len_u = b.size[ua];
                let len_v = b.size[va];
                let nu = (len_u / params.sample_spacing).ceil().max(1.0) as usize;
                let nv = (len_v / params.sample_spacing).ceil().max(1.0) as usize;
                for iu in 0..=nu {
                    for iv in 0..=nv {
                        let mut local = Vector3::zeros();
                        local[axis] = sign * half[axis];
                        local[ua] = -half[ua] + iu as f64 * len_u / nu as f64;
                        local[va] = -half[va] + iv as f64 * len_v / nv as f64;
                        let sample = b.center + rot * local;
                        total += 1;

                        let s = to_sensor.apply(&sample);
                        let range = s.norm();
                        if range < MIN_RAY_T {
                            continue;
                        }
                        let elev = (s.z / range).asin().to_degrees();
                        let beam = ((elev - elev_lo) / beam_step).round();
                        if beam < 0.0 || beam > profile.n_beams as f64 - 1.0 {
                            continue; // outside the vertical field of view
                        }
                        let az = s.y.atan2(s.x).to_degrees().rem_euclid(360.0);
                        let az_idx =
                            (az / profile.azimuth_step_deg).round() as usize % n_azimuth;
                        let cell = image.cell(beam as usize, az_idx);
                        if cell.map_or(true, |r| range <= r + params.occlusion_slack) {
                            visible += 1;
                        }
                    }
                }
            }
        }

        let visible_fraction = if total == 0 {
            0.0
        } else {
            visible as f64 / total as f64
        };
        out.push(BoxVisibility {
            id: b.id,
            visible_fraction,
            is_valid: visible_fraction >= threshold,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hd() -> LidarProfile {
        LidarProfile::new(64, 0.2, (-24.8, 2.0), DetectionProbability::always(), 7).unwrap()
    }

    fn ld() -> LidarProfile {
        LidarProfile::new(13, 2.0, (-24.8, 2.0), DetectionProbability::always(), 7).unwrap()
    }

    fn boxed_in_scene() -> Scene {
        // Four tall walls around the origin so every beam hits something.
        let wall = |cx: f64, cy: f64, yaw: f64| {
            BoxAnnotation::new(
                Vector3::new(cx, cy, 0.0),
                Vector3::new(0.5, 60.0, 60.0),
                yaw,
                0,
            )
            .unwrap()
        };
        Scene {
            boxes: vec![
                wall(20.0, 0.0, 0.0),
                wall(-20.0, 0.0, 0.0),
                wall(0.0, 20.0, std::f64::consts::FRAC_PI_2),
                wall(0.0, -20.0, std::f64::consts::FRAC_PI_2),
            ],
            ground_height: None,
        }
    }

    #[test]
    fn empty_scene_yields_no_points() {
        let scan = synth_scan(&Scene::default(), &hd(), &Pose::identity("vehicle"));
        assert!(scan.is_empty());
    }

    #[test]
    fn scan_respects_the_raster_budget() {
        let scan = synth_scan(&boxed_in_scene(), &hd(), &Pose::identity("vehicle"));
        assert!(scan.len() <= 64 * 1800);
        // Walls surround the sensor, so every ray returns.
        assert_eq!(scan.len(), 64 * 1800);
    }

    #[test]
    fn ld_scan_stays_under_table_budget() {
        let scan = synth_scan(&boxed_in_scene(), &ld(), &Pose::identity("vehicle"));
        assert!(scan.len() <= 2340);
        assert_eq!(scan.len(), 13 * 180);
    }

    #[test]
    fn degrade_same_profile_unit_probability_is_identity() {
        let scan = synth_scan(&boxed_in_scene(), &hd(), &Pose::identity("vehicle"));
        let out = degrade(&scan, &hd(), &hd()).unwrap();
        assert_eq!(out, scan);
    }

    #[test]
    fn hd_to_ld_respects_budget_and_subsets() {
        let scan = synth_scan(&boxed_in_scene(), &hd(), &Pose::identity("vehicle"));
        let out = degrade(&scan, &hd(), &ld()).unwrap();
        assert!(out.len() <= 2340);
        assert!(!out.is_empty());
        let selected = beam_subset(64, 13);
        for p in &out.points {
            assert!(selected.contains(&(p.beam as usize)));
            assert_eq!(p.azimuth % 10, 0);
            assert!(scan.points.contains(p));
        }
        let mut beams: Vec<u16> = out.points.iter().map(|p| p.beam).collect();
        beams.sort_unstable();
        beams.dedup();
        assert_eq!(beams.len(), 13);
    }

    #[test]
    fn degrade_is_idempotent_for_unit_probability() {
        let scan = synth_scan(&boxed_in_scene(), &hd(), &Pose::identity("vehicle"));
        let once = degrade(&scan, &hd(), &ld()).unwrap();
        let twice = degrade(&once, &hd(), &ld()).unwrap();
        assert_eq!(twice, once);
    }

    #[test]
    fn zero_detection_probability_empties_the_cloud() {
        let zero = LidarProfile::new(
            13,
            2.0,
            (-24.8, 2.0),
            DetectionProbability::from_table(vec![], vec![0.0]).unwrap(),
            7,
        )
        .unwrap();
        let scan = synth_scan(&boxed_in_scene(), &hd(), &Pose::identity("vehicle"));
        let out = degrade(&scan, &hd(), &zero).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn incompatible_profiles_are_rejected() {
        let scan = synth_scan(&boxed_in_scene(), &ld(), &Pose::identity("vehicle"));
        assert!(matches!(
            degrade(&scan, &ld(), &hd()),
            Err(Error::IncompatibleProfiles(_))
        ));
        let odd = LidarProfile::new(13, 0.5, (-24.8, 2.0), DetectionProbability::always(), 7)
            .unwrap();
        assert!(matches!(
            degrade(&scan, &hd(), &odd),
            Err(Error::IncompatibleProfiles(_))
        ));
    }

    #[test]
    fn beam_subset_spreads_evenly() {
        let subset = beam_subset(64, 13);
        assert_eq!(subset.len(), 13);
        assert_eq!(subset[0], 0);
        assert_eq!(subset[12], 63);
        assert!(subset.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(beam_subset(64, 1), vec![0]);
    }

    #[test]
    fn detection_draw_is_order_independent_and_uniformish() {
        let a = detection_draw(42, 17);
        assert_eq!(a, detection_draw(42, 17));
        assert_ne!(a, detection_draw(42, 18));
        let mean: f64 = (0..10_000).map(|i| detection_draw(9, i)).sum::<f64>() / 10_000.0;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    fn target_box() -> BoxAnnotation {
        BoxAnnotation::new(
            Vector3::new(20.0, 0.0, 0.0),
            Vector3::new(0.5, 8.0, 4.0),
            0.0,
            1,
        )
        .unwrap()
    }

    fn wide_profile() -> LidarProfile {
        LidarProfile::new(64, 0.2, (-20.0, 20.0), DetectionProbability::always(), 5).unwrap()
    }

    #[test]
    fn unoccluded_box_is_fully_visible() {
        let b = target_box();
        let scene = Scene {
            boxes: vec![b.clone()],
            ground_height: None,
        };
        let profile = wide_profile();
        let pose = Pose::identity("vehicle");
        let cloud = synth_scan(&scene, &profile, &pose);
        let report = valid_objects(
            &cloud,
            &[b],
            &profile,
            0.5,
            &ValidObjectsParams::default(),
        )
        .unwrap();
        assert_eq!(report[0].visible_fraction, 1.0);
        assert!(report[0].is_valid);
    }

    #[test]
    fn box_behind_a_wall_is_invisible() {
        let b = target_box();
        let wall = BoxAnnotation::new(
            Vector3::new(10.0, 0.0, 0.0),
            Vector3::new(0.5, 12.0, 8.0),
            0.0,
            2,
        )
        .unwrap();
        let scene = Scene {
            boxes: vec![wall, b.clone()],
            ground_height: None,
        };
        let profile = wide_profile();
        let pose = Pose::identity("vehicle");
        let cloud = synth_scan(&scene, &profile, &pose);
        let report = valid_objects(
            &cloud,
            &[b],
            &profile,
            0.5,
            &ValidObjectsParams::default(),
        )
        .unwrap();
        assert_eq!(report[0].visible_fraction, 0.0);
        assert!(!report[0].is_valid);
    }

    #[test]
    fn half_covered_box_scores_about_half() {
        let b = target_box();
        // Occluder covering the box's positive-y half in azimuth, at half
        // its range.
        let occluder = BoxAnnotation::new(
            Vector3::new(10.0, 2.2, 0.0),
            Vector3::new(0.5, 4.4, 8.0),
            0.0,
            3,
        )
        .unwrap();
        let scene = Scene {
            boxes: vec![occluder, b.clone()],
            ground_height: None,
        };
        let profile = wide_profile();
        let pose = Pose::identity("vehicle");
        let cloud = synth_scan(&scene, &profile, &pose);
        let report = valid_objects(
            &cloud,
            &[b],
            &profile,
            0.5,
            &ValidObjectsParams::default(),
        )
        .unwrap();
        let f = report[0].visible_fraction;
        assert!((f - 0.5).abs() <= 0.05, "fraction {f}");
    }

    #[test]
    fn raising_threshold_never_validates_a_box() {
        let b = target_box();
        let occluder = BoxAnnotation::new(
            Vector3::new(10.0, 2.2, 0.0),
            Vector3::new(0.5, 4.4, 8.0),
            0.0,
            3,
        )
        .unwrap();
        let scene = Scene {
            boxes: vec![occluder, b.clone()],
            ground_height: None,
        };
        let profile = wide_profile();
        let pose = Pose::identity("vehicle");
        let cloud = synth_scan(&scene, &profile, &pose);
        let mut last_valid = true;
        for threshold in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let report = valid_objects(
                &cloud,
                std::slice::from_ref(&b),
                &profile,
                threshold,
                &ValidObjectsParams::default(),
            )
            .unwrap();
            if report[0].is_valid {
                assert!(last_valid, "box became valid as the threshold rose");
            }
            last_valid = report[0].is_valid;
        }
    }
}
