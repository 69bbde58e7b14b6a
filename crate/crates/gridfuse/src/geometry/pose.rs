use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Maximum allowed per-entry deviation of `R^T R` from the identity.
pub const ORTHONORMALITY_TOL: f64 = 1e-9;

/// A rigid transform (rotation + translation) relative to a named base frame.
///
/// Applying a pose maps points from the pose's local frame into the base
/// frame: `p_base = R * p_local + t`. Rotations are stored as orthonormal
/// 3x3 matrices with determinant +1; composition is plain matrix
/// multiplication so transform chains stay closed-form.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    base_frame: String,
}

impl Pose {
    /// Builds a pose, validating that `rotation` is orthonormal with
    /// determinant +1 (each entry of `R^T R - I` within 1e-9) and that all
    /// entries are finite.
    pub fn new(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        base_frame: impl Into<String>,
    ) -> Result<Self> {
        if rotation.iter().any(|v| !v.is_finite()) || translation.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("pose"));
        }
        let gram = rotation.transpose() * rotation;
        let dev = (gram - Matrix3::identity()).abs().max();
        if dev > ORTHONORMALITY_TOL {
            return Err(Error::invalid(
                "pose rotation",
                format!("not orthonormal: max |R^T R - I| = {dev:.3e}"),
            ));
        }
        if (rotation.determinant() - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(
                "pose rotation",
                format!("determinant {} is not +1", rotation.determinant()),
            ));
        }
        Ok(Self {
            rotation,
            translation,
            base_frame: base_frame.into(),
        })
    }

    /// Identity transform in the given base frame.
    pub fn identity(base_frame: impl Into<String>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
            base_frame: base_frame.into(),
        }
    }

    /// Pure translation, no rotation.
    pub fn from_translation(translation: Vector3<f64>, base_frame: impl Into<String>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
            base_frame: base_frame.into(),
        }
    }

    /// Rotation by `angle` radians about the base-frame Z axis, plus a
    /// translation.
    pub fn rotation_z(angle: f64, translation: Vector3<f64>, base_frame: impl Into<String>) -> Self {
        let (s, c) = angle.sin_cos();
        let rotation = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        Self {
            rotation,
            translation,
            base_frame: base_frame.into(),
        }
    }

    /// Rotation by `angle` radians about an arbitrary axis (normalized
    /// internally; a near-zero axis gives the identity rotation), plus a
    /// translation.
    pub fn from_axis_angle(
        axis: Vector3<f64>,
        angle: f64,
        translation: Vector3<f64>,
        base_frame: impl Into<String>,
    ) -> Self {
        let rotation = if axis.norm() < 1e-12 {
            Matrix3::identity()
        } else {
            nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle)
                .into_inner()
        };
        Self {
            rotation,
            translation,
            base_frame: base_frame.into(),
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn base_frame(&self) -> &str {
        &self.base_frame
    }

    /// Maps a local-frame point into the base frame: `R * p + t`.
    pub fn apply(&self, point: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * point + self.translation
    }

    /// Composition `self ∘ other`: applying the result equals applying
    /// `other` first, then `self`. The result keeps `self`'s base frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
            base_frame: self.base_frame.clone(),
        }
    }

    /// Inverse transform: maps base-frame points back into the local frame.
    pub fn inverse(&self) -> Pose {
        let rotation = self.rotation.transpose();
        Pose {
            rotation,
            translation: -(rotation * self.translation),
            base_frame: self.base_frame.clone(),
        }
    }
}
