//! Closed-form similarity alignment of point sets.

use nalgebra::{Matrix3, SVD};

use crate::error::{Error, Result};
use crate::geometry::{UnitQuaternion, Vec3};

/// Similarity transform `y ≈ scale · rotation · x + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub scale: f64,
    pub rotation: UnitQuaternion,
    pub translation: Vec3,
}

impl Similarity {
    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.rotation * x * self.scale + self.translation
    }
}

/// Least-squares similarity taking `src` onto `dst` (Umeyama's method).
///
/// Minimizes `Σ ‖dst_i − (s R src_i + t)‖²` with `R ∈ SO(3)`.
pub fn umeyama(src: &[Vec3], dst: &[Vec3]) -> Result<Similarity> {
    if src.len() != dst.len() {
        return Err(Error::LengthMismatch {
            left: src.len(),
            right: dst.len(),
        });
    }
    if src.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: src.len(),
        });
    }
    let n = src.len() as f64;
    let mu_s = src.iter().sum::<Vec3>() / n;
    let mu_d = dst.iter().sum::<Vec3>() / n;
    let mut cov = Matrix3::zeros();
    let mut var_s = 0.0;
    for (s, d) in src.iter().zip(dst) {
        let (s, d) = (s - mu_s, d - mu_d);
        cov += d * s.transpose();
        var_s += s.norm_squared();
    }
    cov /= n;
    var_s /= n;
    if var_s <= f64::MIN_POSITIVE {
        return Err(Error::DegenerateScale);
    }
    let svd = SVD::new(cov, true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut d = Vec3::new(1.0, 1.0, 1.0);
    if (u.determinant() * v_t.determinant()) < 0.0 {
        d.z = -1.0;
    }
    let rot = u * Matrix3::from_diagonal(&d) * v_t;
    let scale = svd.singular_values.dot(&d) / var_s;
    let rotation = UnitQuaternion::from_matrix(&rot);
    let translation = mu_d - rotation * mu_s * scale;
    Ok(Similarity {
        scale,
        rotation,
        translation,
    })
}
