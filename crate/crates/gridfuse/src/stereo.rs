//! Image-centric plane-sweep cost volumes.
//!
//! For every depth plane the right camera's features are warped into the
//! left image through the plane-induced homography of the fronto-parallel
//! plane at that depth (in the left camera frame), then correlated with the
//! left features. The stacked per-plane correlations form a C=1 grid over
//! the left camera's [`FrustumSpace`], which [`frustum_to_cartesian`] hands
//! to the shared resampler.

use ndarray::{Array3, Array5};

use crate::error::{Error, Result};
use crate::features::ImageFeatureMap;
use crate::geometry::{CameraModel, CartesianSpace, FrustumSpace, Pose, Space, EPS_DEPTH};
use crate::grid::Grid;
use crate::warp::space_warp;

/// Cost-volume channel layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostVolumeMode {
    /// Channel-mean of the elementwise left x warped-right product; C = 1.
    #[default]
    Correlation,
    /// Left features stacked over warped-right features; C = 2 * C_img.
    Concat,
}

/// Resamples `right`'s features into the left image via the fronto-parallel
/// plane at `depth` (left camera frame). Sampling is bilinear with zero
/// outside the right feature map.
///
/// A zero-baseline pair is degenerate for plane sweeps: it is reported with
/// a warning and warped as the identity.
pub fn plane_sweep_warp(
    right: &ImageFeatureMap,
    left_cam: &CameraModel,
    depth: f64,
) -> Result<ImageFeatureMap> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(Error::invalid(
            "plane depth",
            format!("{depth} must be positive"),
        ));
    }
    let right_cam = right.camera();
    let stride = right.stride();
    let (lrows, lcols) = left_cam.image_size();
    if stride == 0 || lrows % stride != 0 || lcols % stride != 0 {
        return Err(Error::invalid(
            "featurizer stride",
            format!("{stride} does not divide left image {lrows}x{lcols}"),
        ));
    }

    let baseline = (left_cam.pose().translation() - right_cam.pose().translation()).norm();
    if baseline == 0.0 {
        log::warn!("plane_sweep_warp: zero-baseline camera pair; warping as identity");
        if left_cam.image_size() != right_cam.image_size() {
            return Err(Error::Mismatch {
                context: "plane_sweep_warp",
                field: "image size",
            });
        }
        return ImageFeatureMap::new(right.data().clone(), left_cam.clone(), stride);
    }

    let left_to_right = right_cam.pose().inverse().compose(left_cam.pose());
    let (fxl, fyl) = left_cam.focal();
    let (cxl, cyl) = left_cam.principal_point();
    let (fxr, fyr) = right_cam.focal();
    let (cxr, cyr) = right_cam.principal_point();
    let (rrows, rcols) = right.feature_dims();
    let channels = right.channels();
    let rdata = right.data();

    let (orows, ocols) = (lrows / stride, lcols / stride);
    let mut out = Array3::zeros((channels, orows, ocols));
    for r in 0..orows {
        let v_l = (r * stride) as f64;
        for c in 0..ocols {
            let u_l = (c * stride) as f64;
            let p_left = nalgebra::Vector3::new(
                (u_l - cxl) / fxl * depth,
                (v_l - cyl) / fyl * depth,
                depth,
            );
            let p_right = left_to_right.apply(&p_left);
            if p_right.z <= EPS_DEPTH {
                continue;
            }
            let u_r = fxr * p_right.x / p_right.z + cxr;
            let v_r = fyr * p_right.y / p_right.z + cyr;
            let su = u_r / stride as f64;
            let sv = v_r / stride as f64;

            let u0 = su.floor();
            let v0 = sv.floor();
            let fu = su - u0;
            let fv = sv - v0;
            let (u0, v0) = (u0 as i64, v0 as i64);
            for (dv, du, w) in [
                (0i64, 0i64, (1.0 - fv) * (1.0 - fu)),
                (0, 1, (1.0 - fv) * fu),
                (1, 0, fv * (1.0 - fu)),
                (1, 1, fv * fu),
            ] {
                if w == 0.0 {
                    continue;
                }
                let rr = v0 + dv;
                let cc = u0 + du;
                if rr < 0 || rr >= rrows as i64 || cc < 0 || cc >= rcols as i64 {
                    continue;
                }
                for ch in 0..channels {
                    out[(ch, r, c)] +=
                        (w * rdata[(ch, rr as usize, cc as usize)] as f64) as f32;
                }
            }
        }
    }
    ImageFeatureMap::new(out, left_cam.clone(), stride)
}

/// Builds a plane-sweep cost volume over the left camera's frustum.
///
/// Planes must be strictly increasing. In [`CostVolumeMode::Correlation`]
/// the value at (plane, row, col) is the channel-mean of the left features
/// times the warped right features; the output grid has C = 1 and is bound
/// to the left camera's [`FrustumSpace`] with the camera's own pose.
pub fn cost_volume(
    left: &ImageFeatureMap,
    right: &ImageFeatureMap,
    planes: &[f64],
    mode: CostVolumeMode,
) -> Result<Grid> {
    if left.channels() != right.channels() {
        return Err(Error::Mismatch {
            context: "cost_volume",
            field: "channels",
        });
    }
    if left.stride() != right.stride() {
        return Err(Error::Mismatch {
            context: "cost_volume",
            field: "stride",
        });
    }
    let left_cam = left.camera();
    // Validates the plane list: non-empty, positive, strictly increasing.
    let frustum = FrustumSpace::new(left_cam.clone(), planes.to_vec(), left.stride())?;

    let channels = left.channels();
    let (rows, cols) = left.feature_dims();
    let ldata = left.data();
    let out_channels = match mode {
        CostVolumeMode::Correlation => 1,
        CostVolumeMode::Concat => 2 * channels,
    };
    let mut data = Array5::zeros((1, out_channels, planes.len(), rows, cols));

    for (k, &depth) in planes.iter().enumerate() {
        let warped = plane_sweep_warp(right, left_cam, depth)?;
        let wdata = warped.data();
        match mode {
            CostVolumeMode::Correlation => {
                for r in 0..rows {
                    for c in 0..cols {
                        let mut acc = 0.0f64;
                        for ch in 0..channels {
                            acc += ldata[(ch, r, c)] as f64 * wdata[(ch, r, c)] as f64;
                        }
                        data[(0, 0, k, r, c)] = (acc / channels as f64) as f32;
                    }
                }
            }
            CostVolumeMode::Concat => {
                for ch in 0..channels {
                    for r in 0..rows {
                        for c in 0..cols {
                            data[(0, ch, k, r, c)] = ldata[(ch, r, c)];
                            data[(0, channels + ch, k, r, c)] = wdata[(ch, r, c)];
                        }
                    }
                }
            }
        }
    }

    let pose = left_cam.pose().clone();
    Ok(Grid::from_parts(data, Space::Frustum(frustum), pose))
}

/// Warps a frustum-bound cost volume into a Cartesian grid; voxels outside
/// the frustum are zero. Delegates to [`space_warp`].
pub fn frustum_to_cartesian(cv: &Grid, target: &CartesianSpace, pose: &Pose) -> Result<Grid> {
    if !matches!(cv.space(), Space::Frustum(_)) {
        return Err(Error::invalid(
            "cost volume",
            "grid is not bound to a frustum space",
        ));
    }
    space_warp(cv, &Space::Cartesian(target.clone()), pose)
}

/// Depth planes uniform in inverse depth between `near` and `far`
/// inclusive, since disparity is linear in inverse depth.
pub fn inverse_depth_planes(near: f64, far: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::EmptyPlanes);
    }
    if !(near > 0.0 && far > near) {
        return Err(Error::invalid(
            "plane range",
            format!("near {near}, far {far} must satisfy 0 < near < far"),
        ));
    }
    if count == 1 {
        return Ok(vec![near]);
    }
    let inv_near = 1.0 / near;
    let inv_far = 1.0 / far;
    Ok((0..count)
        .map(|k| {
            let t = k as f64 / (count - 1) as f64;
            1.0 / (inv_near + t * (inv_far - inv_near))
        })
        .collect())
}
