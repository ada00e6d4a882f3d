//! Kinematic-consistency metrics between a generated and a reference
//! trajectory.
//!
//! ```text
//! RotErr   = Σ_k arccos((tr(R_gen R_gtᵀ) − 1) / 2)
//! TransErr = Σ_k ‖T_gt − T_gen‖₂
//! ```

use serde::{Deserialize, Serialize};

use crate::align::umeyama;
use crate::error::{Error, Result};
use crate::geometry::{quat_geodesic_angle, Pose, Vec3};
use crate::trajectory::PoseTrajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignMode {
    /// Rigid alignment on the first frame, then a global scale matching total
    /// path length.
    #[default]
    FirstFrame,
    /// Least-squares similarity over all frame positions.
    Umeyama,
}

fn same_len(a: &PoseTrajectory, b: &PoseTrajectory) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Moves `gen` into `gt`'s frame.
pub fn canonical_align(
    gen: &PoseTrajectory,
    gt: &PoseTrajectory,
    mode: AlignMode,
) -> Result<PoseTrajectory> {
    same_len(gen, gt)?;
    match mode {
        AlignMode::FirstFrame => {
            let anchor = gt.poses()[0];
            let g = anchor.compose(&gen.poses()[0].inverse());
            let rigid = gen.map_poses(|p| g.compose(p));
            let (l_gen, l_gt) = (rigid.path_length(), gt.path_length());
            let scale = if l_gen > 0.0 {
                l_gt / l_gen
            } else if l_gt == 0.0 {
                1.0
            } else {
                return Err(Error::DegenerateScale);
            };
            let origin = anchor.translation;
            Ok(rigid.map_poses(|p| {
                Pose::new(p.rotation, origin + (p.translation - origin) * scale)
            }))
        }
        AlignMode::Umeyama => {
            let src: Vec<Vec3> = gen.poses().iter().map(|p| p.translation).collect();
            let dst: Vec<Vec3> = gt.poses().iter().map(|p| p.translation).collect();
            let sim = umeyama(&src, &dst)?;
            Ok(gen.map_poses(|p| Pose::new(sim.rotation * p.rotation, sim.apply(&p.translation))))
        }
    }
}

/// Angle of `R_a R_bᵀ`.
///
/// Equal to `arccos((tr(R_a R_bᵀ) − 1) / 2)`, but evaluated from the relative
/// quaternion so that identical rotations give exactly zero; the arccos form
/// loses about eight digits near the identity.
pub fn rotation_error(a: &Pose, b: &Pose) -> f64 {
    quat_geodesic_angle(&a.rotation, &b.rotation)
}

/// The trace form, argument clamped to `[-1, 1]`.
pub fn rotation_error_trace(a: &Pose, b: &Pose) -> f64 {
    let m = a.rotation_matrix() * b.rotation_matrix().transpose();
    ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

pub fn rot_err(gen: &PoseTrajectory, gt: &PoseTrajectory) -> Result<f64> {
    same_len(gen, gt)?;
    Ok(gen.poses().iter().zip(gt.poses()).map(|(a, b)| rotation_error(a, b)).sum())
}

pub fn trans_err(gen: &PoseTrajectory, gt: &PoseTrajectory) -> Result<f64> {
    same_len(gen, gt)?;
    Ok(gen
        .poses()
        .iter()
        .zip(gt.poses())
        .map(|(a, b)| (a.translation - b.translation).norm())
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryError {
    pub rot_err: f64,
    pub trans_err: f64,
    /// `(radians, meters)` per frame.
    pub per_frame: Vec<(f64, f64)>,
    pub n_frames: usize,
}

/// Per-frame and summed errors of already aligned trajectories.
pub fn trajectory_error(gen: &PoseTrajectory, gt: &PoseTrajectory) -> Result<TrajectoryError> {
    same_len(gen, gt)?;
    let per_frame: Vec<(f64, f64)> = gen
        .poses()
        .iter()
        .zip(gt.poses())
        .map(|(a, b)| (rotation_error(a, b), (a.translation - b.translation).norm()))
        .collect();
    Ok(TrajectoryError {
        rot_err: per_frame.iter().map(|p| p.0).sum(),
        trans_err: per_frame.iter().map(|p| p.1).sum(),
        n_frames: per_frame.len(),
        per_frame,
    })
}

/// Aligns, then measures.
pub fn evaluate(gen: &PoseTrajectory, gt: &PoseTrajectory, mode: AlignMode) -> Result<TrajectoryError> {
    trajectory_error(&canonical_align(gen, gt, mode)?, gt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitQuaternion;
    use std::f64::consts::FRAC_PI_2;

    fn traj(poses: Vec<Pose>) -> PoseTrajectory {
        let n = poses.len();
        PoseTrajectory::new((0..n).map(|i| i as f64 * 0.1).collect(), poses, true).unwrap()
    }

    fn wiggle(n: usize) -> PoseTrajectory {
        traj(
            (0..n)
                .map(|i| {
                    let f = i as f64;
                    Pose::new(
                        UnitQuaternion::from_euler_angles(0.1 * f, -0.05 * f, 0.2),
                        Vec3::new(f.sin(), 0.3 * f, (0.5 * f).cos()),
                    )
                })
                .collect(),
        )
    }

    fn close(a: &PoseTrajectory, b: &PoseTrajectory, tol: f64) {
        for (p, q) in a.poses().iter().zip(b.poses()) {
            assert!((p.translation - q.translation).norm() < tol);
            assert!(p.rotation.angle_to(&q.rotation) < tol);
        }
    }

    #[test]
    fn identical_is_zero() {
        let gt = wiggle(10);
        let out = canonical_align(&gt, &gt, AlignMode::FirstFrame).unwrap();
        close(&out, &gt, 1e-12);
        assert_eq!(rot_err(&gt, &gt).unwrap(), 0.0);
        assert_eq!(trans_err(&gt, &gt).unwrap(), 0.0);
    }

    #[test]
    fn rigid_and_scale_removed() {
        let gt = wiggle(12);
        let g = Pose::new(UnitQuaternion::from_euler_angles(1.0, -0.4, 2.0), Vec3::new(3.0, -1.0, 7.0));
        for mode in [AlignMode::FirstFrame, AlignMode::Umeyama] {
            close(&canonical_align(&gt.map_poses(|p| g.compose(p)), &gt, mode).unwrap(), &gt, 1e-9);
            let half = gt.map_poses(|p| Pose::new(p.rotation, p.translation * 0.5));
            close(&canonical_align(&half, &gt, mode).unwrap(), &gt, 1e-9);
        }
    }

    #[test]
    fn quarter_turn_frame() {
        let gt = traj(vec![Pose::identity(); 3]);
        let mut poses = vec![Pose::identity(); 3];
        poses[1].rotation = UnitQuaternion::from_axis_angle(&Vec3::z_axis(), FRAC_PI_2);
        let gen = traj(poses);
        assert!((rot_err(&gen, &gt).unwrap() - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn trace_form_agrees_away_from_identity() {
        let gt = wiggle(20);
        let gen = gt.map_poses(|p| {
            Pose::new(p.rotation * UnitQuaternion::from_euler_angles(0.4, -0.9, 0.2), p.translation)
        });
        for (a, b) in gen.poses().iter().zip(gt.poses()) {
            assert!((rotation_error(a, b) - rotation_error_trace(a, b)).abs() < 1e-9);
        }
        assert!(rotation_error_trace(&gt.poses()[3], &gt.poses()[3]) < 1e-7);
    }

    #[test]
    fn translation_examples() {
        let gt = traj(vec![Pose::identity()]);
        let gen = traj(vec![Pose::from_translation(Vec3::new(3.0, 4.0, 0.0))]);
        assert_eq!(trans_err(&gen, &gt).unwrap(), 5.0);
        let gt2 = traj(vec![Pose::identity(); 2]);
        let gen2 = traj(vec![Pose::from_translation(Vec3::x()), Pose::from_translation(Vec3::y())]);
        assert_eq!(trans_err(&gen2, &gt2).unwrap(), 2.0);
        let e = trajectory_error(&gen2, &gt2).unwrap();
        assert_eq!((e.n_frames, e.trans_err), (2, 2.0));
    }

    #[test]
    fn errors() {
        let a = wiggle(3);
        let b = wiggle(4);
        assert!(rot_err(&a, &b).is_err());
        assert!(trans_err(&a, &b).is_err());
        assert!(canonical_align(&a, &b, AlignMode::FirstFrame).is_err());
        let still = traj(vec![Pose::identity(); 3]);
        assert!(matches!(
            canonical_align(&still, &a, AlignMode::FirstFrame),
            Err(Error::DegenerateScale)
        ));
    }
}
