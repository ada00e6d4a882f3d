//! Synthetic clips with known ground truth.
//!
//! The device follows a motion `m(t)` in the IMU integration frame with
//! `m(0) = 0`, and its body rotates at a constant rate `ω`, so
//! `R_b(t) = exp(ω t)`. Given the true calibration `(T_I, λ)`:
//!
//! ```text
//! ground truth  p(t) = R_TI m(t) + t_TI        R(t) = R_TI R_b(t)
//! accelerometer a(t) = R_b(t)ᵀ (m̈(t) + g) + noise
//! gyroscope     w(t) = ω + noise
//! SfM           (p(t) + noise) / λ,   R(t) exp(noise)
//! ```
//!
//! so the dead-reckoned IMU track, mapped through `T_I`, lands exactly on
//! `λ` times the SfM track. Every derivative is analytic.

use serde::{Deserialize, Serialize};

use crate::calibration::{apply_scale, solve_calibration, CalibrationOptions};
use crate::error::{Error, Result};
use crate::eval::{evaluate, AlignMode};
use crate::geometry::{quat_exp, quat_geodesic_angle, Pose, PoseRecord, Vec3};
use crate::kalman::{dead_reckoned_poses, fuse_trajectories, FusionOptions, KalmanConfig};
use crate::rng::NoiseRng;
use crate::signal::BandpassConfig;
use crate::trajectory::{ImuSample, ImuSequence, PoseTrajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Motion {
    /// No translation at all; `true_v0` is ignored.
    Rest,
    /// `m(t) = v0 t`.
    ConstVel,
    /// `v0 t` plus a horizontal circle through the origin.
    Circle {
        #[serde(default = "one")]
        radius: f64,
        /// rad/s
        #[serde(default = "one")]
        angular_rate: f64,
    },
    /// `v0 t` plus a few seeded sinusoids per axis at whole multiples of
    /// `1 / duration`, starting at or above `min_freq_hz`.
    SmoothRandom {
        #[serde(default = "default_harmonics")]
        harmonics: usize,
        /// Per-term amplitude bound, meters.
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_min_freq")]
        min_freq_hz: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn default_harmonics() -> usize {
    3
}
fn default_amplitude() -> f64 {
    0.05
}
fn default_min_freq() -> f64 {
    0.5
}

impl Default for Motion {
    fn default() -> Self {
        Motion::SmoothRandom {
            harmonics: default_harmonics(),
            amplitude: default_amplitude(),
            min_freq_hz: default_min_freq(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimProfile {
    pub seed: u64,
    pub duration: f64,
    pub imu_rate: f64,
    pub sfm_rate: f64,
    pub accel_noise_sigma: f64,
    pub gyro_noise_sigma: f64,
    pub sfm_trans_noise_sigma: f64,
    pub sfm_rot_noise_sigma: f64,
    pub true_lambda: f64,
    pub true_t_i: PoseRecord,
    pub true_v0: [f64; 3],
    pub gravity: [f64; 3],
    /// Constant body angular velocity, rad/s.
    pub spin_rate: [f64; 3],
    pub point_count: u64,
    pub motion: Motion,
}

impl Default for SimProfile {
    fn default() -> Self {
        Self {
            seed: 0,
            duration: 10.0,
            imu_rate: 1000.0,
            sfm_rate: 20.0,
            accel_noise_sigma: 0.3,
            gyro_noise_sigma: 0.005,
            sfm_trans_noise_sigma: 0.005,
            sfm_rot_noise_sigma: 0.002,
            true_lambda: 1.0,
            true_t_i: PoseRecord::from(&Pose::identity()),
            true_v0: [0.0; 3],
            gravity: [0.0, 0.0, -9.81],
            spin_rate: [0.0; 3],
            point_count: 5000,
            motion: Motion::default(),
        }
    }
}

impl SimProfile {
    pub fn noiseless(mut self) -> Self {
        self.accel_noise_sigma = 0.0;
        self.gyro_noise_sigma = 0.0;
        self.sfm_trans_noise_sigma = 0.0;
        self.sfm_rot_noise_sigma = 0.0;
        self
    }

    /// Multiplies every noise sigma by `k`.
    pub fn scale_noise(mut self, k: f64) -> Self {
        self.accel_noise_sigma *= k;
        self.gyro_noise_sigma *= k;
        self.sfm_trans_noise_sigma *= k;
        self.sfm_rot_noise_sigma *= k;
        self
    }

    /// Default profile with a seeded calibration: log-uniform `λ` in
    /// `[0.2, 5]`, uniform random rotation, translation within ±2 m, and
    /// `v0` within ±0.5 m/s per axis.
    pub fn randomized(seed: u64) -> Self {
        let mut rng = NoiseRng::new(seed ^ 0x9e37_79b9_7f4a_7c15);
        let lambda = (rng.range(0.2f64.ln(), 5.0f64.ln())).exp();
        let rotation = random_rotation(&mut rng);
        let t = Vec3::new(rng.range(-2.0, 2.0), rng.range(-2.0, 2.0), rng.range(-2.0, 2.0));
        let v0 = [rng.range(-0.5, 0.5), rng.range(-0.5, 0.5), rng.range(-0.5, 0.5)];
        Self {
            seed,
            true_lambda: lambda,
            true_t_i: PoseRecord::from(&Pose::new(rotation, t)),
            true_v0: v0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !(pos(self.duration) && pos(self.imu_rate) && pos(self.sfm_rate)) {
            return Err(Error::invalid("duration and rates must be positive"));
        }
        if !pos(self.true_lambda) {
            return Err(Error::invalid("true_lambda must be positive"));
        }
        let sigmas = [
            self.accel_noise_sigma,
            self.gyro_noise_sigma,
            self.sfm_trans_noise_sigma,
            self.sfm_rot_noise_sigma,
        ];
        if sigmas.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::invalid("noise sigmas must be non-negative"));
        }
        if self.imu_samples() < 2 || self.sfm_frames() < 1 {
            return Err(Error::invalid("profile produces too few samples"));
        }
        Pose::try_from(&self.true_t_i)?;
        Ok(())
    }

    fn imu_samples(&self) -> usize {
        (self.duration * self.imu_rate).round() as usize
    }

    fn sfm_frames(&self) -> usize {
        (self.duration * self.sfm_rate).round() as usize
    }
}

fn random_rotation(rng: &mut NoiseRng) -> crate::geometry::UnitQuaternion {
    let (u1, u2, u3) = (rng.uniform(), rng.uniform(), rng.uniform());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    crate::geometry::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(
        b * (tau * u3).cos(),
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
    ))
}

/// One sinusoid per axis: amplitude, angular frequency, phase.
#[derive(Debug, Clone, Copy)]
struct Term {
    amp: Vec3,
    omega: f64,
    phase: Vec3,
}

/// Closed-form motion with its first two derivatives.
#[derive(Debug, Clone)]
struct Path {
    v0: Vec3,
    circle: Option<(f64, f64)>,
    terms: Vec<Term>,
}

impl Path {
    fn new(p: &SimProfile, rng: &mut NoiseRng) -> Self {
        let v0 = Vec3::from(p.true_v0);
        match &p.motion {
            Motion::Rest => Path {
                v0: Vec3::zeros(),
                circle: None,
                terms: vec![],
            },
            Motion::ConstVel => Path {
                v0,
                circle: None,
                terms: vec![],
            },
            Motion::Circle {
                radius,
                angular_rate,
            } => Path {
                v0,
                circle: Some((*radius, *angular_rate)),
                terms: vec![],
            },
            Motion::SmoothRandom {
                harmonics,
                amplitude,
                min_freq_hz,
            } => {
                let k0 = (min_freq_hz * p.duration).ceil().max(1.0);
                let terms = (0..*harmonics)
                    .map(|k| {
                        let amp = Vec3::new(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0), rng.range(-1.0, 1.0))
                            * *amplitude;
                        let tau = std::f64::consts::TAU;
                        let phase = Vec3::new(rng.range(0.0, tau), rng.range(0.0, tau), rng.range(0.0, tau));
                        Term {
                            amp,
                            omega: tau * (k0 + k as f64) / p.duration,
                            phase,
                        }
                    })
                    .collect();
                Path {
                    v0,
                    circle: None,
                    terms,
                }
            }
        }
    }

    /// `(m, ṁ, m̈)` at time `t`.
    fn eval(&self, t: f64) -> (Vec3, Vec3, Vec3) {
        let mut pos = self.v0 * t;
        let mut vel = self.v0;
        let mut acc = Vec3::zeros();
        if let Some((r, w)) = self.circle {
            let (s, c) = (w * t).sin_cos();
            pos += Vec3::new(r * (c - 1.0), r * s, 0.0);
            vel += Vec3::new(-r * w * s, r * w * c, 0.0);
            acc += Vec3::new(-r * w * w * c, -r * w * w * s, 0.0);
        }
        for term in &self.terms {
            let w = term.omega;
            for i in 0..3 {
                let (a, ph) = (term.amp[i], term.phase[i]);
                let (s, c) = (w * t + ph).sin_cos();
                pos[i] += a * (s - ph.sin() - w * t * ph.cos());
                vel[i] += a * w * (c - ph.cos());
                acc[i] -= a * w * w * s;
            }
        }
        (pos, vel, acc)
    }
}

#[derive(Debug, Clone)]
pub struct SimBundle {
    /// Metric camera poses at the SfM timestamps.
    pub ground_truth: PoseTrajectory,
    pub imu: ImuSequence,
    pub sfm: PoseTrajectory,
    /// Initial velocity of the motion in the IMU frame, what calibration
    /// should recover.
    pub true_v0: Vec3,
    pub true_t_i: Pose,
    pub true_lambda: f64,
}

impl SimBundle {
    pub fn write(&self, dir: &std::path::Path) -> Result<()> {
        crate::io::write_imu_csv(&dir.join("imu.csv"), &self.imu)?;
        crate::io::write_trajectory(&dir.join("sfm.txt"), &self.sfm)?;
        crate::io::write_trajectory(&dir.join("gt.txt"), &self.ground_truth)
    }
}

pub fn generate(p: &SimProfile) -> Result<SimBundle> {
    p.validate()?;
    let mut rng = NoiseRng::new(p.seed);
    let path = Path::new(p, &mut rng);
    let t_i = Pose::try_from(&p.true_t_i)?;
    let spin = Vec3::from(p.spin_rate);
    let gravity = Vec3::from(p.gravity);

    let samples = (0..p.imu_samples())
        .map(|k| {
            let t = k as f64 / p.imu_rate;
            let (_, _, acc) = path.eval(t);
            let body = quat_exp(&(spin * t));
            let a = body.inverse() * (acc + gravity) + rng.normal3(p.accel_noise_sigma);
            let w = spin + rng.normal3(p.gyro_noise_sigma);
            ImuSample::new(t, a, w)
        })
        .collect();
    let imu = ImuSequence::new(samples)?;

    let times: Vec<f64> = (0..p.sfm_frames()).map(|j| j as f64 / p.sfm_rate).collect();
    let truth: Vec<Pose> = times
        .iter()
        .map(|&t| {
            let (m, _, _) = path.eval(t);
            Pose::new(t_i.rotation * quat_exp(&(spin * t)), t_i.transform_point(&m))
        })
        .collect();
    let sfm: Vec<Pose> = truth
        .iter()
        .map(|g| {
            let dt = rng.normal3(p.sfm_trans_noise_sigma);
            let dr = rng.normal3(p.sfm_rot_noise_sigma);
            Pose::new(g.rotation * quat_exp(&dr), (g.translation + dt) / p.true_lambda)
        })
        .collect();

    Ok(SimBundle {
        ground_truth: PoseTrajectory::new(times.clone(), truth, true)?,
        imu,
        sfm: PoseTrajectory::new(times, sfm, false)?.with_point_count(Some(p.point_count)),
        true_v0: path.eval(0.0).1,
        true_t_i: t_i,
        true_lambda: p.true_lambda,
    })
}

/// Stage settings used by [`run_oracle_suite_with`].
#[derive(Debug, Clone, Default)]
pub struct OracleConfig {
    pub bandpass: BandpassConfig,
    pub calibration: CalibrationOptions,
    pub kalman: KalmanConfig,
    pub fusion: FusionOptions,
}

/// Recovered-versus-true calibration, and errors of the fused, IMU-only and
/// SfM-only tracks against ground truth after canonical alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub seed: u64,
    pub lambda_true: f64,
    pub lambda_est: f64,
    pub lambda_rel_err: f64,
    /// m/s
    pub v0_err: f64,
    /// degrees
    pub t_i_rot_err_deg: f64,
    /// meters
    pub t_i_trans_err: f64,
    pub converged: bool,
    pub residual_rms: f64,
    pub frames: usize,
    pub dropped: usize,
    pub fused_trans_err: f64,
    pub fused_rot_err: f64,
    pub imu_only_trans_err: f64,
    pub sfm_only_trans_err: f64,
    pub sfm_only_rot_err: f64,
}

pub fn run_oracle_suite(profile: &SimProfile) -> Result<OracleReport> {
    run_oracle_suite_with(profile, &OracleConfig::default())
}

/// Filter, calibrate, fuse and score one generated clip.
pub fn run_oracle_suite_with(profile: &SimProfile, cfg: &OracleConfig) -> Result<OracleReport> {
    let bundle = generate(profile)?;
    oracle_on_bundle(&bundle, profile.seed, cfg)
}

pub fn oracle_on_bundle(bundle: &SimBundle, seed: u64, cfg: &OracleConfig) -> Result<OracleReport> {
    let filtered = cfg.bandpass.apply(&bundle.imu)?;
    let calib = solve_calibration(&filtered, &bundle.sfm, &cfg.calibration)?;
    let scaled = apply_scale(&bundle.sfm, calib.lambda)?;
    let fused = fuse_trajectories(&filtered, &scaled, &calib, &cfg.kalman, &cfg.fusion)?;
    let gt = &bundle.ground_truth;

    // Compare on the frames the filter kept.
    let kept: Vec<usize> = fused
        .trajectory
        .timestamps()
        .iter()
        .map(|t| gt.timestamps().iter().position(|g| g == t).expect("fused frame in truth"))
        .collect();
    let subset = |tr: &PoseTrajectory| -> Result<PoseTrajectory> {
        PoseTrajectory::new(
            kept.iter().map(|&i| tr.timestamps()[i]).collect(),
            kept.iter().map(|&i| tr.poses()[i]).collect(),
            true,
        )
    };
    let gt_k = subset(gt)?;
    let mode = AlignMode::Umeyama;
    let fused_err = evaluate(&fused.trajectory, &gt_k, mode)?;
    let sfm_err = evaluate(&subset(&scaled)?, &gt_k, mode)?;
    let imu_only = dead_reckoned_poses(
        &filtered,
        &calib,
        gt_k.timestamps(),
        cfg.calibration.max_gap,
    )?;
    let imu_err = evaluate(&imu_only, &gt_k, mode)?;

    Ok(OracleReport {
        seed,
        lambda_true: bundle.true_lambda,
        lambda_est: calib.lambda,
        lambda_rel_err: (calib.lambda - bundle.true_lambda).abs() / bundle.true_lambda,
        v0_err: (calib.v0 - bundle.true_v0).norm(),
        t_i_rot_err_deg: quat_geodesic_angle(&calib.t_i.rotation, &bundle.true_t_i.rotation).to_degrees(),
        t_i_trans_err: (calib.t_i.translation - bundle.true_t_i.translation).norm(),
        converged: calib.converged,
        residual_rms: calib.residual_rms,
        frames: gt_k.len(),
        dropped: fused.dropped,
        fused_trans_err: fused_err.trans_err,
        fused_rot_err: fused_err.rot_err,
        imu_only_trans_err: imu_err.trans_err,
        sfm_only_trans_err: sfm_err.trans_err,
        sfm_only_rot_err: sfm_err.rot_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rest_is_pure_gravity() {
        let p = SimProfile {
            motion: Motion::Rest,
            ..SimProfile::default()
        }
        .noiseless();
        let b = generate(&p).unwrap();
        for s in b.imu.samples() {
            assert_eq!(s.linear_accel, Vec3::new(0.0, 0.0, -9.81));
            assert_eq!(s.angular_vel, Vec3::zeros());
        }
        for pose in b.sfm.poses() {
            assert_eq!(pose.translation, Vec3::zeros());
        }
    }

    #[test]
    fn const_vel_is_linear() {
        let p = SimProfile {
            motion: Motion::ConstVel,
            true_v0: [1.0, 0.0, 0.0],
            ..SimProfile::default()
        }
        .noiseless();
        let b = generate(&p).unwrap();
        for s in b.imu.samples() {
            assert_eq!(s.linear_accel - Vec3::from(p.gravity), Vec3::zeros());
        }
        for (t, pose) in b.ground_truth.iter() {
            assert!((pose.translation - Vec3::new(t, 0.0, 0.0)).norm() < 1e-12);
        }
        assert_eq!(b.true_v0, Vec3::x());
    }

    #[test]
    fn circle_centripetal() {
        let (r, w) = (1.0, 1.5);
        let p = SimProfile {
            motion: Motion::Circle {
                radius: r,
                angular_rate: w,
            },
            ..SimProfile::default()
        }
        .noiseless();
        let b = generate(&p).unwrap();
        let v = r * w;
        for s in b.imu.samples() {
            let a = s.linear_accel - Vec3::from(p.gravity);
            assert!((a.norm() - v * v / r).abs() < 1e-6);
        }
    }

    #[test]
    fn second_differences_match_accel() {
        let p = SimProfile {
            imu_rate: 200.0,
            sfm_rate: 200.0,
            ..SimProfile::default()
        }
        .noiseless();
        let b = generate(&p).unwrap();
        let dt = 1.0 / 200.0;
        let g = Vec3::from(p.gravity);
        let pos = b.ground_truth.poses();
        for k in 1..pos.len() - 1 {
            let dd = (pos[k + 1].translation - pos[k].translation * 2.0 + pos[k - 1].translation) / (dt * dt);
            let a = b.imu.samples()[k].linear_accel - g;
            // Central differences are second order: error ≈ dt²/12 · |m''''|.
            assert!((dd - a).norm() < 1e-4, "k={k} {}", (dd - a).norm());
        }
    }

    #[test]
    fn deterministic() {
        let p = SimProfile::randomized(17);
        let render = |b: &SimBundle| {
            (
                crate::io::render_trajectory(&b.sfm),
                crate::io::render_trajectory(&b.ground_truth),
                format!("{:?}", b.imu.samples()),
            )
        };
        assert_eq!(render(&generate(&p).unwrap()), render(&generate(&p).unwrap()));
        let q = SimProfile { seed: 18, ..p };
        assert_ne!(render(&generate(&q).unwrap()).0, render(&generate(&SimProfile::randomized(17)).unwrap()).0);
    }

    #[test]
    fn profile_json() {
        let p = SimProfile::randomized(3);
        let back: SimProfile = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
        let partial: SimProfile = serde_json::from_str(r#"{"seed": 4, "motion": {"kind": "circle"}}"#).unwrap();
        assert_eq!(partial.motion, Motion::Circle { radius: 1.0, angular_rate: 1.0 });
        assert!(serde_json::from_str::<SimProfile>(r#"{"bogus": 1}"#).is_err());
        let bad = SimProfile {
            true_lambda: 0.0,
            ..SimProfile::default()
        };
        assert!(generate(&bad).is_err());
    }

    #[test]
    fn zero_noise_oracle() {
        let r = run_oracle_suite(&SimProfile::default().noiseless()).unwrap();
        assert!(r.lambda_rel_err < 1e-3, "{r:?}");
        assert!(r.fused_trans_err < 1e-3, "{r:?}");
    }
}
