//! Timed pose and IMU sequences.

use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};

fn check_increasing(ts: impl IntoIterator<Item = f64>) -> Result<()> {
    let mut prev: Option<f64> = None;
    for (index, t) in ts.into_iter().enumerate() {
        if !t.is_finite() {
            return Err(Error::NonFinite("timestamp"));
        }
        if let Some(p) = prev {
            if t <= p {
                return Err(Error::NonIncreasingTime { index });
            }
        }
        prev = Some(t);
    }
    Ok(())
}

/// A camera trajectory with optional structure-from-motion diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseTrajectory {
    timestamps: Vec<f64>,
    poses: Vec<Pose>,
    /// `true` once translations are in meters.
    pub scaled: bool,
    /// Number of reconstructed points reported by the SfM stage.
    pub point_count: Option<u64>,
}

impl PoseTrajectory {
    pub fn new(timestamps: Vec<f64>, poses: Vec<Pose>, scaled: bool) -> Result<Self> {
        if timestamps.len() != poses.len() {
            return Err(Error::LengthMismatch {
                left: timestamps.len(),
                right: poses.len(),
            });
        }
        if poses.is_empty() {
            return Err(Error::Empty("trajectory"));
        }
        check_increasing(timestamps.iter().copied())?;
        if poses.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("pose"));
        }
        Ok(Self {
            timestamps,
            poses,
            scaled,
            point_count: None,
        })
    }

    pub fn with_point_count(mut self, n: Option<u64>) -> Self {
        self.point_count = n;
        self
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &Pose)> {
        self.timestamps.iter().copied().zip(self.poses.iter())
    }

    /// Same timestamps and flags, new poses.
    pub fn map_poses(&self, f: impl FnMut(&Pose) -> Pose) -> PoseTrajectory {
        PoseTrajectory {
            timestamps: self.timestamps.clone(),
            poses: self.poses.iter().map(f).collect(),
            scaled: self.scaled,
            point_count: self.point_count,
        }
    }

    /// Sum of distances between consecutive positions.
    pub fn path_length(&self) -> f64 {
        self.poses
            .windows(2)
            .map(|w| (w[1].translation - w[0].translation).norm())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    pub t: f64,
    /// m/s², sensor frame.
    pub linear_accel: Vec3,
    /// rad/s, sensor frame.
    pub angular_vel: Vec3,
}

impl ImuSample {
    pub fn new(t: f64, linear_accel: Vec3, angular_vel: Vec3) -> Self {
        Self {
            t,
            linear_accel,
            angular_vel,
        }
    }

    fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.linear_accel.iter().all(|c| c.is_finite())
            && self.angular_vel.iter().all(|c| c.is_finite())
    }
}

/// IMU samples with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImuSequence {
    samples: Vec<ImuSample>,
}

impl ImuSequence {
    pub fn new(samples: Vec<ImuSample>) -> Result<Self> {
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("IMU sample"));
        }
        check_increasing(samples.iter().map(|s| s.t))?;
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[ImuSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub(crate) fn require(&self, needed: usize) -> Result<()> {
        if self.samples.len() < needed {
            Err(Error::TooFewSamples {
                needed,
                got: self.samples.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Copy of the sequence with each acceleration replaced by `f(sample)`.
    pub fn map_accel(&self, mut f: impl FnMut(&ImuSample) -> Vec3) -> ImuSequence {
        ImuSequence {
            samples: self
                .samples
                .iter()
                .map(|s| ImuSample {
                    linear_accel: f(s),
                    ..*s
                })
                .collect(),
        }
    }
}

/// Index of the timestamp in `sorted` nearest to `t`, with its absolute gap.
pub(crate) fn nearest_index(sorted: &[f64], t: f64) -> Option<(usize, f64)> {
    if sorted.is_empty() {
        return None;
    }
    let i = sorted.partition_point(|&s| s < t);
    let mut best = None::<(usize, f64)>;
    for j in [i.saturating_sub(1), i.min(sorted.len() - 1)] {
        let gap = (sorted[j] - t).abs();
        if best.is_none_or(|(_, g)| gap < g) {
            best = Some((j, gap));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unordered_time() {
        let p = Pose::identity();
        assert!(matches!(
            PoseTrajectory::new(vec![0.0, 0.0], vec![p, p], false),
            Err(Error::NonIncreasingTime { index: 1 })
        ));
        assert!(PoseTrajectory::new(vec![], vec![], false).is_err());
        let s = |t| ImuSample::new(t, Vec3::zeros(), Vec3::zeros());
        assert!(ImuSequence::new(vec![s(1.0), s(0.5)]).is_err());
    }

    #[test]
    fn nearest() {
        let ts = [0.0, 1.0, 2.0];
        assert_eq!(nearest_index(&ts, -5.0), Some((0, 5.0)));
        assert_eq!(nearest_index(&ts, 1.4).unwrap().0, 1);
        assert_eq!(nearest_index(&ts, 1.6).unwrap().0, 2);
        assert_eq!(nearest_index(&ts, 9.0), Some((2, 7.0)));
    }

    #[test]
    fn path_length() {
        let poses = [0.0, 3.0, 3.0]
            .iter()
            .zip([0.0, 4.0, 5.0])
            .map(|(&x, y)| Pose::from_translation(Vec3::new(x, y, 0.0)))
            .collect();
        let tr = PoseTrajectory::new(vec![0.0, 1.0, 2.0], poses, true).unwrap();
        assert_eq!(tr.path_length(), 6.0);
    }
}
