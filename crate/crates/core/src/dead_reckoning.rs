//! Translation-only integration of IMU acceleration.
//!
//! Starting from `P(0) = 0` and `v(0) = v0`, each step uses the acceleration at
//! its left endpoint:
//!
//! ```text
//! P(k+1) = P(k) + v(k) Δt + ½ a(k) Δt²
//! v(k+1) = v(k) + a(k) Δt
//! ```
//!
//! with `Δt = t(k+1) − t(k)` taken from the timestamps. Orientation is not
//! propagated.

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::trajectory::ImuSequence;

#[derive(Debug, Clone, PartialEq)]
pub struct ImuTrajectory {
    pub timestamps: Vec<f64>,
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
}

impl ImuTrajectory {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

pub fn integrate(seq: &ImuSequence, v0: Vec3) -> Result<ImuTrajectory> {
    seq.require(2)?;
    let s = seq.samples();
    let mut timestamps = Vec::with_capacity(s.len());
    let mut positions = Vec::with_capacity(s.len());
    let mut velocities = Vec::with_capacity(s.len());
    let mut p = Vec3::zeros();
    let mut v = v0;
    timestamps.push(s[0].t);
    positions.push(p);
    velocities.push(v);
    for (k, w) in s.windows(2).enumerate() {
        let dt = w[1].t - w[0].t;
        if !(dt > 0.0) {
            return Err(Error::NonIncreasingTime { index: k + 1 });
        }
        let a = w[0].linear_accel;
        p += v * dt + a * (0.5 * dt * dt);
        v += a * dt;
        timestamps.push(w[1].t);
        positions.push(p);
        velocities.push(v);
    }
    Ok(ImuTrajectory {
        timestamps,
        positions,
        velocities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::ImuSample;
    use std::f64::consts::TAU;

    fn seq(dt: f64, n: usize, a: impl Fn(f64) -> Vec3) -> ImuSequence {
        ImuSequence::new(
            (0..n)
                .map(|k| {
                    let t = k as f64 * dt;
                    ImuSample::new(t, a(t), Vec3::zeros())
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_acceleration_steps() {
        let tr = integrate(&seq(1.0, 3, |_| Vec3::x()), Vec3::zeros()).unwrap();
        assert_eq!(tr.positions[0], Vec3::zeros());
        assert_eq!(tr.positions[1], Vec3::new(0.5, 0.0, 0.0));
        assert_eq!(tr.velocities[1], Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(tr.positions[2], Vec3::new(2.0, 0.0, 0.0));
    }

    #[test]
    fn uniform_motion() {
        let tr = integrate(&seq(0.5, 5, |_| Vec3::zeros()), Vec3::y()).unwrap();
        assert_eq!(tr.positions[4], Vec3::new(0.0, 2.0, 0.0));
    }

    #[test]
    fn needs_two_samples() {
        assert!(integrate(&seq(1.0, 1, |_| Vec3::zeros()), Vec3::zeros()).is_err());
    }

    #[test]
    fn linear_in_initial_velocity() {
        let s = seq(0.01, 300, |t| Vec3::new((3.0 * t).sin(), t * t, -1.0));
        let v0 = Vec3::new(0.3, -1.2, 2.0);
        let a = integrate(&s, v0).unwrap();
        let b = integrate(&s, Vec3::zeros()).unwrap();
        for k in 0..s.len() {
            let expect = v0 * (a.timestamps[k] - a.timestamps[0]);
            assert!((a.positions[k] - b.positions[k] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn time_reversal_returns_home() {
        // Accelerate then decelerate symmetrically; replaying the mirrored
        // profile with the end velocity negated retraces the path.
        let dt = 0.01;
        let n = 201;
        let a = |t: f64| Vec3::new((TAU * t / 2.0).cos(), 0.0, 0.5);
        let fwd = integrate(&seq(dt, n, a), Vec3::zeros()).unwrap();
        let t_end = (n - 1) as f64 * dt;
        let back_seq = seq(dt, n, |t| a(t_end - t));
        let v_end = fwd.velocities[n - 1];
        let back = integrate(&back_seq, -v_end).unwrap();
        let home = fwd.positions[n - 1] + back.positions[n - 1];
        assert!(home.norm() < 0.05, "{home:?}");
    }

    #[test]
    fn per_step_dt_from_timestamps() {
        let s = ImuSequence::new(vec![
            ImuSample::new(0.0, Vec3::x(), Vec3::zeros()),
            ImuSample::new(1.0, Vec3::x(), Vec3::zeros()),
            ImuSample::new(3.0, Vec3::x(), Vec3::zeros()),
        ])
        .unwrap();
        let tr = integrate(&s, Vec3::zeros()).unwrap();
        // Closed form ½ a t² holds exactly for constant acceleration.
        assert_eq!(tr.positions[2].x, 4.5);
        assert_eq!(tr.velocities[2].x, 3.0);
    }
}
