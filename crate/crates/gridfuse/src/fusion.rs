//! Backbone and head plumbing: warp encoder grids to a common space, fuse
//! them, run a pluggable sub-network, and adapt outputs to per-head spaces.
//! Also the occupancy ground-truth op and its evaluation metrics.

use ndarray::Array5;

use crate::error::{Error, Result};
use crate::geometry::{CartesianSpace, Pose, Space};
use crate::grid::{concat_channels, Grid};
use crate::points::PointCloud;
use crate::warp::space_warp;

/// How warped grids are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FusionMode {
    /// Stack channels in input order.
    #[default]
    Concat,
    /// Elementwise sum; requires equal channel counts.
    Sum,
}

/// Warps every grid to (`space`, `pose`) and combines them.
///
/// Grids already bound to the common space and pose are passed through
/// unchanged. In `Sum` mode all inputs must share a channel count.
pub fn fuse(grids: &[Grid], space: &Space, pose: &Pose, mode: FusionMode) -> Result<Grid> {
    if grids.is_empty() {
        return Err(Error::invalid("fuse inputs", "at least one grid required"));
    }
    let warped: Vec<Grid> = grids
        .iter()
        .map(|g| {
            if g.space() == space && g.pose() == pose {
                Ok(g.clone())
            } else {
                space_warp(g, space, pose)
            }
        })
        .collect::<Result<_>>()?;

    match mode {
        FusionMode::Concat => {
            let mut out = warped[0].clone();
            for g in &warped[1..] {
                out = concat_channels(&out, g)?;
            }
            Ok(out)
        }
        FusionMode::Sum => {
            let channels = warped[0].channels();
            if warped.iter().any(|g| g.channels() != channels) {
                return Err(Error::Mismatch {
                    context: "fuse (sum)",
                    field: "channels",
                });
            }
            if warped.iter().any(|g| g.batch() != warped[0].batch()) {
                return Err(Error::Mismatch {
                    context: "fuse (sum)",
                    field: "batch",
                });
            }
            let shape = warped[0].data().raw_dim();
            let mut acc = vec![0.0f64; warped[0].data().len()];
            for g in &warped {
                let data = g.data().as_standard_layout();
                for (slot, v) in acc.iter_mut().zip(data.as_slice().expect("standard layout")) {
                    *slot += *v as f64;
                }
            }
            let data = Array5::from_shape_vec(shape, acc.into_iter().map(|v| v as f32).collect())
                .expect("shape preserved");
            Ok(Grid::from_parts(data, space.clone(), pose.clone()))
        }
    }
}

/// A user-defined Grid -> Grid sub-network run by the backbone in its
/// common space.
pub trait Subnetwork {
    fn apply(&self, input: &Grid) -> Result<Grid>;
}

/// Reference sub-network: passes the fused grid through unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentitySubnetwork;

impl Subnetwork for IdentitySubnetwork {
    fn apply(&self, input: &Grid) -> Result<Grid> {
        Ok(input.clone())
    }
}

/// The shared backbone: fuses encoder grids in a common space and feeds the
/// result through a sub-network.
pub struct Backbone {
    pub space: Space,
    pub pose: Pose,
    pub mode: FusionMode,
    pub subnet: Box<dyn Subnetwork>,
}

impl Backbone {
    /// Backbone with the identity sub-network.
    pub fn identity(space: Space, pose: Pose, mode: FusionMode) -> Self {
        Self {
            space,
            pose,
            mode,
            subnet: Box::new(IdentitySubnetwork),
        }
    }

    pub fn forward(&self, grids: &[Grid]) -> Result<Grid> {
        let fused = fuse(grids, &self.space, &self.pose, self.mode)?;
        self.subnet.apply(&fused)
    }
}

/// Adapts a backbone output to a head's space: the identity when space and
/// pose match exactly, otherwise a single [`space_warp`].
pub fn head_adapt(backbone_out: &Grid, head_space: &Space, head_pose: &Pose) -> Result<Grid> {
    if backbone_out.space() == head_space && backbone_out.pose() == head_pose {
        return Ok(backbone_out.clone());
    }
    space_warp(backbone_out, head_space, head_pose)
}

/// Binary occupancy grid: a voxel is 1.0 iff at least one point falls in it.
pub fn occupancy_ground_truth(cloud: &PointCloud, space: &CartesianSpace, pose: &Pose) -> Grid {
    let [dz, dx, dy] = space.dims();
    let mut data = Array5::zeros((1, 1, dz, dx, dy));
    let to_reference = &cloud.pose;
    let to_local = pose.inverse();
    for p in &cloud.points {
        let local = to_local.apply(&to_reference.apply(&p.position()));
        if let Some([z, x, y]) = space.voxel_containing(&local) {
            data[(0, 0, z, x, y)] = 1.0;
        }
    }
    Grid::from_parts(data, Space::Cartesian(space.clone()), pose.clone())
}

/// Confusion-matrix metrics of a probability grid against a binary grid at
/// a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupancyMetrics {
    pub threshold: f64,
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub precision: f64,
    pub recall: f64,
    pub iou: f64,
}

/// Evaluates `prediction` (probabilities in [0, 1]) against a binary
/// `truth` grid. A cell counts as predicted-occupied when its probability
/// is >= `threshold`; empty prediction against empty truth scores 1.0.
pub fn occupancy_metrics(
    prediction: &Grid,
    truth: &Grid,
    threshold: f64,
) -> Result<OccupancyMetrics> {
    if prediction.space() != truth.space() || prediction.pose() != truth.pose() {
        return Err(Error::Mismatch {
            context: "occupancy_metrics",
            field: "space",
        });
    }
    if prediction.shape() != truth.shape() {
        return Err(Error::Mismatch {
            context: "occupancy_metrics",
            field: "dims",
        });
    }
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fn_ = 0u64;
    for (&p, &t) in prediction.data().iter().zip(truth.data().iter()) {
        let predicted = p as f64 >= threshold;
        let actual = t > 0.5;
        match (predicted, actual) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let ratio = |num: u64, den: u64| {
        if den == 0 {
            1.0
        } else {
            num as f64 / den as f64
        }
    };
    Ok(OccupancyMetrics {
        threshold,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
        iou: ratio(tp, tp + fp + fn_),
    })
}
