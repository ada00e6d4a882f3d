//! Rotation and rigid-pose primitives.
//!
//! Quaternions are written `(w, x, y, z)` at every file boundary. Poses map
//! body coordinates into the world frame (right-handed, camera looks along +z),
//! so `translation` is the body origin expressed in world coordinates.

use nalgebra::{Matrix3, Quaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type UnitQuaternion = nalgebra::UnitQuaternion<f64>;

/// Normalizes a `(w, x, y, z)` 4-tuple into a unit quaternion.
pub fn quat_normalize(wxyz: [f64; 4]) -> Result<UnitQuaternion> {
    if wxyz.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("quaternion"));
    }
    let q = Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
    let norm = q.norm();
    if norm <= f64::MIN_POSITIVE {
        return Err(Error::DegenerateQuaternion);
    }
    Ok(UnitQuaternion::new_unchecked(q / norm))
}

pub fn quat_to_wxyz(q: &UnitQuaternion) -> [f64; 4] {
    [q.w, q.i, q.j, q.k]
}

/// Flips the sign so that `w >= 0`. Both signs encode the same rotation.
pub fn canonical(q: &UnitQuaternion) -> UnitQuaternion {
    if q.w < 0.0 {
        UnitQuaternion::new_unchecked(-q.into_inner())
    } else {
        *q
    }
}

/// Angle of the rotation taking `a` to `b`, in `[0, pi]`.
pub fn quat_geodesic_angle(a: &UnitQuaternion, b: &UnitQuaternion) -> f64 {
    // conj(a) ⊗ b, written out so that a == b cancels exactly.
    let (va, vb) = (a.imag(), b.imag());
    let w = a.w * b.w + va.dot(&vb);
    let v = vb * a.w - va * b.w - va.cross(&vb);
    2.0 * v.norm().atan2(w.abs())
}

/// Rotation vector (axis times angle) to quaternion.
pub fn quat_exp(rotvec: &Vec3) -> UnitQuaternion {
    UnitQuaternion::from_scaled_axis(*rotvec)
}

/// Quaternion to rotation vector with angle in `[0, pi]`.
pub fn quat_log(q: &UnitQuaternion) -> Vec3 {
    canonical(q).scaled_axis()
}

pub fn rotation_matrix(q: &UnitQuaternion) -> Matrix3<f64> {
    q.to_rotation_matrix().into_inner()
}

/// A rigid transform: rotation followed by translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: UnitQuaternion,
    pub translation: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(rotation: UnitQuaternion, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(UnitQuaternion::identity(), Vec3::zeros())
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self::new(UnitQuaternion::identity(), translation)
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let r = self.rotation.inverse();
        Pose {
            rotation: r,
            translation: -(r * self.translation),
        }
    }

    /// `reference⁻¹ ∘ self`: this pose expressed in the frame of `reference`.
    pub fn relative_to(&self, reference: &Pose) -> Pose {
        reference.inverse().compose(self)
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        rotation_matrix(&self.rotation)
    }

    pub fn is_finite(&self) -> bool {
        self.translation.iter().all(|c| c.is_finite())
            && quat_to_wxyz(&self.rotation).iter().all(|c| c.is_finite())
    }
}

/// JSON form of a [`Pose`]: rotation as `[w, x, y, z]`, canonical sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
}

impl From<&Pose> for PoseRecord {
    fn from(p: &Pose) -> Self {
        Self {
            rotation: quat_to_wxyz(&canonical(&p.rotation)),
            translation: p.translation.into(),
        }
    }
}

impl TryFrom<&PoseRecord> for Pose {
    type Error = Error;

    fn try_from(r: &PoseRecord) -> Result<Self> {
        let t: Vec3 = r.translation.into();
        if t.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("translation"));
        }
        Ok(Pose::new(quat_normalize(r.rotation)?, t))
    }
}

pub fn pose_compose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

pub fn pose_inverse(a: &Pose) -> Pose {
    a.inverse()
}

pub fn pose_relative(reference: &Pose, p: &Pose) -> Pose {
    p.relative_to(reference)
}
