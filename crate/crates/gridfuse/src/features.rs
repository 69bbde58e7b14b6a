//! Per-camera image feature maps and the pluggable featurizer interface.
//!
//! Heavy learned image sub-networks are out of scope; encoders here consume
//! an [`ImageFeatureMap`] produced by any [`ImageFeaturizer`]. Two
//! deterministic featurizers ship with the crate: a strided identity over
//! raw image channels and a fixed-seed random per-pixel linear map.

use ndarray::{Array3, ArrayView3};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::CameraModel;

/// A (C, rows, cols) feature volume tied to the camera that produced it.
///
/// Feature pixel (r, c) corresponds to full-resolution pixel
/// (r * stride, c * stride); `stride` is the featurizer's subsampling
/// factor, and the feature dims equal the camera image size divided by it.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFeatureMap {
    data: Array3<f32>,
    camera: CameraModel,
    stride: usize,
}

impl ImageFeatureMap {
    pub fn new(data: Array3<f32>, camera: CameraModel, stride: usize) -> Result<Self> {
        let (rows, cols) = camera.image_size();
        let (_, frows, fcols) = data.dim();
        if stride == 0 || rows % stride != 0 || cols % stride != 0 {
            return Err(Error::invalid(
                "featurizer stride",
                format!("{stride} does not divide image {rows}x{cols}"),
            ));
        }
        if frows != rows / stride || fcols != cols / stride {
            return Err(Error::Mismatch {
                context: "image feature map",
                field: "dims",
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image feature map"));
        }
        Ok(Self {
            data,
            camera,
            stride,
        })
    }

    pub fn data(&self) -> &Array3<f32> {
        &self.data
    }

    pub fn camera(&self) -> &CameraModel {
        &self.camera
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn channels(&self) -> usize {
        self.data.dim().0
    }

    /// Feature-plane dims (rows, cols).
    pub fn feature_dims(&self) -> (usize, usize) {
        let (_, r, c) = self.data.dim();
        (r, c)
    }

    /// Replaces the feature values, keeping camera and stride.
    pub(crate) fn with_data(&self, data: Array3<f32>) -> Self {
        debug_assert_eq!(data.dim(), self.data.dim());
        Self {
            data,
            camera: self.camera.clone(),
            stride: self.stride,
        }
    }
}

/// Turns a raw (C, rows, cols) image in [0, 1] into an [`ImageFeatureMap`].
pub trait ImageFeaturizer {
    fn stride(&self) -> usize;
    fn featurize(&self, image: ArrayView3<'_, f32>, camera: &CameraModel)
        -> Result<ImageFeatureMap>;
}

/// Passes raw image channels through, subsampled by `stride`.
#[derive(Debug, Clone)]
pub struct IdentityFeaturizer {
    pub stride: usize,
}

impl ImageFeaturizer for IdentityFeaturizer {
    fn stride(&self) -> usize {
        self.stride
    }

    fn featurize(
        &self,
        image: ArrayView3<'_, f32>,
        camera: &CameraModel,
    ) -> Result<ImageFeatureMap> {
        check_image(&image, camera)?;
        let (channels, _, _) = image.dim();
        let (rows, cols) = camera.image_size();
        let (frows, fcols) = (rows / self.stride, cols / self.stride);
        let data = Array3::from_shape_fn((channels, frows, fcols), |(c, r, col)| {
            image[(c, r * self.stride, col * self.stride)]
        });
        ImageFeatureMap::new(data, camera.clone(), self.stride)
    }
}

/// Fixed-seed random per-pixel linear map from image channels to
/// `out_channels`, subsampled by `stride`. Weights are drawn once from a
/// seeded generator, so the featurizer is deterministic.
#[derive(Debug, Clone)]
pub struct RandomLinearFeaturizer {
    pub out_channels: usize,
    pub stride: usize,
    pub seed: u64,
}

impl ImageFeaturizer for RandomLinearFeaturizer {
    fn stride(&self) -> usize {
        self.stride
    }

    fn featurize(
        &self,
        image: ArrayView3<'_, f32>,
        camera: &CameraModel,
    ) -> Result<ImageFeatureMap> {
        check_image(&image, camera)?;
        let (in_channels, _, _) = image.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let dist = Uniform::new(-1.0f64, 1.0).expect("valid range");
        let weights: Vec<f64> = (0..self.out_channels * in_channels)
            .map(|_| dist.sample(&mut rng))
            .collect();

        let (rows, cols) = camera.image_size();
        let (frows, fcols) = (rows / self.stride, cols / self.stride);
        let data = Array3::from_shape_fn((self.out_channels, frows, fcols), |(oc, r, col)| {
            let mut acc = 0.0f64;
            for ic in 0..in_channels {
                acc += weights[oc * in_channels + ic]
                    * image[(ic, r * self.stride, col * self.stride)] as f64;
            }
            acc as f32
        });
        ImageFeatureMap::new(data, camera.clone(), self.stride)
    }
}

fn check_image(image: &ArrayView3<'_, f32>, camera: &CameraModel) -> Result<()> {
    let (_, rows, cols) = image.dim();
    if (rows, cols) != camera.image_size() {
        return Err(Error::Mismatch {
            context: "featurize",
            field: "image size",
        });
    }
    if image.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("image"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;

    fn camera() -> CameraModel {
        CameraModel::new(
            (40.0, 40.0),
            (15.5, 11.5),
            (24, 32),
            Pose::identity("vehicle"),
        )
        .unwrap()
    }

    #[test]
    fn identity_featurizer_subsamples() {
        let cam = camera();
        let image = Array3::from_shape_fn((3, 24, 32), |(c, r, col)| {
            (c * 1000 + r * 32 + col) as f32 / 4096.0
        });
        let map = IdentityFeaturizer { stride: 4 }
            .featurize(image.view(), &cam)
            .unwrap();
        assert_eq!(map.feature_dims(), (6, 8));
        assert_eq!(map.data()[(1, 2, 3)], image[(1, 8, 12)]);
    }

    #[test]
    fn random_linear_featurizer_is_deterministic() {
        let cam = camera();
        let image = Array3::from_elem((3, 24, 32), 0.5f32);
        let feat = RandomLinearFeaturizer {
            out_channels: 8,
            stride: 2,
            seed: 42,
        };
        let a = feat.featurize(image.view(), &cam).unwrap();
        let b = feat.featurize(image.view(), &cam).unwrap();
        assert_eq!(a.data(), b.data());
        assert_eq!(a.channels(), 8);
    }

    #[test]
    fn stride_must_divide_image() {
        let cam = camera();
        let image = Array3::zeros((1, 24, 32));
        assert!(IdentityFeaturizer { stride: 5 }
            .featurize(image.view(), &cam)
            .is_err());
    }
}
