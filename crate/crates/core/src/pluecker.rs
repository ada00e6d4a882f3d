//! Per-pixel Plücker ray embeddings of camera poses.
//!
//! For pixel `(u, v)` of a camera with rotation `R`, translation `t` and
//! intrinsics `K`:
//!
//! ```text
//! d = R K⁻¹ [u, v, 1]ᵀ + t
//! p = (t × d, d)
//! ```
//!
//! `d` is left unnormalized and includes `+t`. Many Plücker conventions use a
//! unit direction without the offset; this module reproduces the formula
//! above literally.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};
use crate::trajectory::PoseTrajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(Error::invalid("focal lengths must be positive and finite"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if !(0.0..self.width as f64).contains(&self.cx) || !(0.0..self.height as f64).contains(&self.cy) {
            return Err(Error::invalid("principal point must lie inside the image"));
        }
        Ok(())
    }

    /// `K⁻¹ [u, v, 1]ᵀ`.
    pub fn unproject(&self, u: f64, v: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }
}

/// Where within a pixel the ray is cast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PixelSampling {
    /// `(u + 0.5, v + 0.5)`.
    #[default]
    Center,
    /// Integer `(u, v)`.
    Corner,
}

impl PixelSampling {
    fn offset(self) -> f64 {
        match self {
            PixelSampling::Center => 0.5,
            PixelSampling::Corner => 0.0,
        }
    }
}

/// Six channels per pixel, row-major, ordered `(m₁, m₂, m₃, d₁, d₂, d₃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlueckerMap {
    pub width: u32,
    pub height: u32,
    data: Vec<f64>,
}

impl PlueckerMap {
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, u: u32, v: u32) -> [f64; 6] {
        let i = (v as usize * self.width as usize + u as usize) * 6;
        self.data[i..i + 6].try_into().unwrap()
    }

    pub fn moment(&self, u: u32, v: u32) -> Vec3 {
        let p = self.pixel(u, v);
        Vec3::new(p[0], p[1], p[2])
    }

    pub fn direction(&self, u: u32, v: u32) -> Vec3 {
        let p = self.pixel(u, v);
        Vec3::new(p[3], p[4], p[5])
    }
}

pub fn pluecker_embed(pose: &Pose, k: &Intrinsics, sampling: PixelSampling) -> PlueckerMap {
    let r = pose.rotation_matrix();
    let t = pose.translation;
    let off = sampling.offset();
    let mut data = Vec::with_capacity(k.width as usize * k.height as usize * 6);
    for v in 0..k.height {
        for u in 0..k.width {
            let d = r * k.unproject(u as f64 + off, v as f64 + off) + t;
            let m = t.cross(&d);
            data.extend_from_slice(&[m.x, m.y, m.z, d.x, d.y, d.z]);
        }
    }
    PlueckerMap {
        width: k.width,
        height: k.height,
        data,
    }
}

/// Embeds every pose of a trajectory, frames in parallel.
pub fn embed_trajectory(
    traj: &PoseTrajectory,
    k: &Intrinsics,
    sampling: PixelSampling,
) -> Vec<PlueckerMap> {
    traj.poses()
        .par_iter()
        .map(|p| pluecker_embed(p, k, sampling))
        .collect()
}

/// Re-expresses every pose relative to the first.
pub fn relative_trajectory(traj: &PoseTrajectory) -> PoseTrajectory {
    let first = traj.poses()[0];
    traj.map_poses(|p| p.relative_to(&first))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitQuaternion;

    fn unit_k(w: u32, h: u32) -> Intrinsics {
        Intrinsics::new(1.0, 1.0, 0.0, 0.0, w, h).unwrap()
    }

    #[test]
    fn corner_identity() {
        let m = pluecker_embed(&Pose::identity(), &unit_k(1, 1), PixelSampling::Corner);
        assert_eq!(m.pixel(0, 0), [0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn corner_translated() {
        let pose = Pose::from_translation(Vec3::x());
        let m = pluecker_embed(&pose, &unit_k(1, 1), PixelSampling::Corner);
        assert_eq!(m.pixel(0, 0), [0.0, -1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn center_offsets_half_pixel() {
        let m = pluecker_embed(&Pose::identity(), &unit_k(2, 2), PixelSampling::Center);
        assert_eq!(m.direction(1, 0), Vec3::new(1.5, 0.5, 1.0));
        assert_eq!(m.data().len(), 2 * 2 * 6);
    }

    #[test]
    fn zero_translation_zero_moment() {
        let pose = Pose::new(UnitQuaternion::from_euler_angles(0.3, -0.2, 1.1), Vec3::zeros());
        let k = Intrinsics::new(50.0, 60.0, 8.0, 8.0, 16, 16).unwrap();
        let m = pluecker_embed(&pose, &k, PixelSampling::Center);
        for px in m.data().chunks(6) {
            assert_eq!(&px[..3], &[0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn intrinsics_validation() {
        assert!(Intrinsics::new(0.0, 1.0, 0.0, 0.0, 4, 4).is_err());
        assert!(Intrinsics::new(1.0, 1.0, 4.0, 0.0, 4, 4).is_err());
        assert!(Intrinsics::new(1.0, 1.0, 0.0, -0.1, 4, 4).is_err());
        assert!(Intrinsics::new(1.0, 1.0, 0.0, 0.0, 0, 4).is_err());
    }

    #[test]
    fn relative_round_trip() {
        let poses: Vec<Pose> = (0..5)
            .map(|i| {
                let f = i as f64;
                Pose::new(
                    UnitQuaternion::from_euler_angles(0.1 * f, 0.2, -0.3 * f),
                    Vec3::new(f, 2.0 - f, 0.5 * f),
                )
            })
            .collect();
        let traj = PoseTrajectory::new((0..5).map(f64::from).collect(), poses.clone(), true).unwrap();
        let rel = relative_trajectory(&traj);
        assert_eq!(rel.poses()[0].translation.norm(), 0.0);
        for (orig, r) in poses.iter().zip(rel.poses()) {
            let back = poses[0].compose(r);
            assert!((back.translation - orig.translation).norm() < 1e-9);
            assert!(back.rotation.angle_to(&orig.rotation) < 1e-9);
        }
        let same = PoseTrajectory::new(vec![0.0, 1.0], vec![poses[3]; 2], true).unwrap();
        for p in relative_trajectory(&same).poses() {
            assert!(p.translation.norm() < 1e-12 && p.rotation.angle() < 1e-12);
        }
    }
}
