//! Per-clip cleaning metrics and threshold-based clip selection.

mod metadata;
mod strategy;

pub use metadata::{
    histogram_stats, ingest_metadata, parse_metadata, write_metadata, CleansingRecord, Histogram,
    Ingested, HISTOGRAM_FIELDS,
};
pub use strategy::{apply_strategy, Decision, DropReason, RescueRule, StrategyConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::quat_geodesic_angle;
use crate::trajectory::PoseTrajectory;

/// Optical-flow magnitudes for one frame pair, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMap {
    pub width: u32,
    pub height: u32,
    pub magnitudes: Vec<f32>,
}

impl FlowMap {
    pub fn new(width: u32, height: u32, magnitudes: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("flow map dimensions must be positive"));
        }
        if magnitudes.len() != width as usize * height as usize {
            return Err(Error::LengthMismatch {
                left: magnitudes.len(),
                right: width as usize * height as usize,
            });
        }
        if magnitudes.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::invalid("flow magnitudes must be finite and non-negative"));
        }
        Ok(Self {
            width,
            height,
            magnitudes,
        })
    }

    pub fn constant(width: u32, height: u32, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }
}

/// Upper edges of the first four flow bins, in pixels.
pub const FLOW_BIN_EDGES: [f64; 4] = [4.0, 8.0, 12.0, 16.0];

/// Proportion of pixels per flow-magnitude bin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FivePointStats {
    pub p0_4: f64,
    pub p4_8: f64,
    pub p8_12: f64,
    pub p12_16: f64,
    pub p16_plus: f64,
}

impl FivePointStats {
    pub fn as_array(&self) -> [f64; 5] {
        [self.p0_4, self.p4_8, self.p8_12, self.p12_16, self.p16_plus]
    }

    pub fn from_array(p: [f64; 5]) -> Self {
        Self {
            p0_4: p[0],
            p4_8: p[1],
            p8_12: p[2],
            p12_16: p[3],
            p16_plus: p[4],
        }
    }

    /// Share of pixels moving at least 12 px.
    pub fn p12_plus(&self) -> f64 {
        self.p12_16 + self.p16_plus
    }
}

/// Bin index for one magnitude.
pub fn flow_bin(magnitude: f64) -> usize {
    FLOW_BIN_EDGES.iter().take_while(|&&e| magnitude >= e).count()
}

fn check_maps(maps: &[FlowMap]) -> Result<()> {
    let first = maps.first().ok_or(Error::Empty("flow maps"))?;
    if maps
        .iter()
        .any(|m| m.width != first.width || m.height != first.height)
    {
        return Err(Error::invalid("flow maps must share dimensions"));
    }
    Ok(())
}

/// Pools every pixel of every map into the five bins.
pub fn five_point_stats(maps: &[FlowMap]) -> Result<FivePointStats> {
    check_maps(maps)?;
    let mut counts = [0u64; 5];
    for m in maps.iter().flat_map(|m| &m.magnitudes) {
        counts[flow_bin(*m as f64)] += 1;
    }
    let n = counts.iter().sum::<u64>() as f64;
    Ok(FivePointStats::from_array(counts.map(|c| c as f64 / n)))
}

/// Mean flow magnitude over all pixels of all maps.
pub fn motion_strength(maps: &[FlowMap]) -> Result<f64> {
    check_maps(maps)?;
    let (sum, n) = maps
        .iter()
        .flat_map(|m| &m.magnitudes)
        .fold((0.0f64, 0usize), |(s, n), &m| (s + m as f64, n + 1));
    Ok(sum / n as f64)
}

fn population_variance(xs: &[f64]) -> f64 {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64
}

/// Translation and rotation smoothness of a trajectory.
///
/// Returns the population variances of the per-frame displacement lengths
/// `‖t_k − t_{k−1}‖` and of the per-frame geodesic rotation increments.
pub fn motion_smoothness(traj: &PoseTrajectory) -> Result<(f64, f64)> {
    if traj.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: traj.len(),
        });
    }
    let p = traj.poses();
    let (steps, turns): (Vec<f64>, Vec<f64>) = p
        .windows(2)
        .map(|w| {
            (
                (w[1].translation - w[0].translation).norm(),
                quat_geodesic_angle(&w[0].rotation, &w[1].rotation),
            )
        })
        .unzip();
    Ok((population_variance(&steps), population_variance(&turns)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Pose, UnitQuaternion, Vec3};
    use proptest::prelude::*;

    #[test]
    fn zero_map() {
        let m = FlowMap::constant(8, 8, 0.0).unwrap();
        assert_eq!(five_point_stats(std::slice::from_ref(&m)).unwrap().as_array(), [1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(motion_strength(&[m]).unwrap(), 0.0);
    }

    #[test]
    fn half_and_half() {
        let mags = (0..16).map(|i| if i % 2 == 0 { 10.0 } else { 20.0 }).collect();
        let m = FlowMap::new(4, 4, mags).unwrap();
        assert_eq!(five_point_stats(&[m]).unwrap().as_array(), [0.0, 0.0, 0.5, 0.0, 0.5]);
    }

    #[test]
    fn bin_edges_are_half_open() {
        assert_eq!(flow_bin(0.0), 0);
        assert_eq!(flow_bin(3.999), 0);
        assert_eq!(flow_bin(4.0), 1);
        assert_eq!(flow_bin(12.0), 3);
        assert_eq!(flow_bin(16.0), 4);
        assert_eq!(flow_bin(1e9), 4);
    }

    #[test]
    fn constant_strength() {
        let m = FlowMap::constant(3, 5, 5.0).unwrap();
        assert_eq!(motion_strength(&[m.clone(), m]).unwrap(), 5.0);
    }

    #[test]
    fn empty_and_mismatched() {
        assert!(five_point_stats(&[]).is_err());
        assert!(motion_strength(&[]).is_err());
        let a = FlowMap::constant(2, 2, 1.0).unwrap();
        let b = FlowMap::constant(2, 3, 1.0).unwrap();
        assert!(five_point_stats(&[a, b]).is_err());
        assert!(FlowMap::new(2, 2, vec![1.0; 3]).is_err());
        assert!(FlowMap::new(1, 1, vec![-1.0]).is_err());
        assert!(FlowMap::new(1, 1, vec![f32::NAN]).is_err());
    }

    fn traj(poses: Vec<Pose>) -> PoseTrajectory {
        let n = poses.len();
        PoseTrajectory::new((0..n).map(|i| i as f64).collect(), poses, true).unwrap()
    }

    #[test]
    fn smoothness_examples() {
        let linear = traj((0..6).map(|i| Pose::from_translation(Vec3::x() * i as f64)).collect());
        assert_eq!(motion_smoothness(&linear).unwrap().0, 0.0);

        let spin = traj(
            (0..6)
                .map(|i| Pose::new(UnitQuaternion::from_axis_angle(&Vec3::z_axis(), 0.1 * i as f64), Vec3::zeros()))
                .collect(),
        );
        assert!(motion_smoothness(&spin).unwrap().1 < 1e-20);

        let mut x = 0.0;
        let alt = traj(
            (0..7)
                .map(|i| {
                    if i > 0 {
                        x += if i % 2 == 1 { 1.0 } else { 3.0 };
                    }
                    Pose::from_translation(Vec3::x() * x)
                })
                .collect(),
        );
        assert!((motion_smoothness(&alt).unwrap().0 - 1.0).abs() < 1e-12);
        assert!(motion_smoothness(&traj(vec![Pose::identity()])).is_err());
    }

    proptest! {
        #[test]
        fn proportions_sum_to_one(mags in prop::collection::vec(0.0f32..40.0, 1..200)) {
            let n = mags.len() as u32;
            let s = five_point_stats(&[FlowMap::new(n, 1, mags).unwrap()]).unwrap();
            prop_assert!((s.as_array().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn smoothness_rigid_invariant(
            steps in prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), 3..12),
            g in prop::array::uniform3(-3.0f64..3.0),
            off in prop::array::uniform3(-10.0f64..10.0),
        ) {
            let mut pos = Vec3::zeros();
            let poses: Vec<Pose> = steps.iter().enumerate().map(|(i, s)| {
                pos += Vec3::from(*s);
                Pose::new(UnitQuaternion::from_euler_angles(s[0], 0.3 * i as f64, s[2]), pos)
            }).collect();
            let t = traj(poses);
            let global = Pose::new(UnitQuaternion::from_euler_angles(g[0], g[1], g[2]), Vec3::from(off));
            let moved = t.map_poses(|p| global.compose(p));
            let (a, b) = (motion_smoothness(&t).unwrap(), motion_smoothness(&moved).unwrap());
            prop_assert!((a.0 - b.0).abs() < 1e-9);
            prop_assert!((a.1 - b.1).abs() < 1e-9);
        }
    }
}
