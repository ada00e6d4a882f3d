//! IMU-to-camera calibration.
//!
//! Given a gravity-free IMU stream and a scale-ambiguous SfM trajectory, find
//! the initial velocity `v0`, the rigid transform `T_I` from the IMU
//! integration frame to the SfM world frame, and the scale `λ` such that
//!
//! ```text
//! Σ_k ‖T_I · P_I(t_k; v0) − λ · P_c(t_k)‖²
//! ```
//!
//! is minimal, where `P_I(·; v0)` is the dead-reckoned IMU position and `k`
//! runs over SfM frames. The solver is Levenberg–Marquardt over ten
//! parameters `[v0, rotation vector of T_I, translation of T_I, ln λ]`.
//!
//! Dead reckoning is linear in `v0` (`P_I(t; v0) = P_I(t; 0) + v0 (t − t0)`),
//! so after removing the span of `{1, t − t0}` from both point sets the
//! problem becomes a plain similarity alignment with a closed-form optimum.
//! That optimum seeds the solver next to the identity start.

use nalgebra::DVector;
use rand_core::Rng;
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::align::umeyama;
use crate::dead_reckoning::integrate;
use crate::error::{Error, Result};
use crate::geometry::{quat_exp, quat_log, Pose, PoseRecord, UnitQuaternion, Vec3};
use crate::lm::{self, LmOptions};
use crate::trajectory::{nearest_index, ImuSequence, PoseTrajectory};

pub const MIN_FRAMES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    pub max_iterations: usize,
    /// Use only the final frame's residual.
    pub endpoint_only: bool,
    /// Largest allowed SfM-to-IMU timestamp gap, seconds.
    pub max_gap: f64,
    /// Random-rotation restarts tried when no start converges.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            endpoint_only: false,
            max_gap: 0.010,
            restarts: 4,
            seed: 0x5eed_ca1b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationResult {
    pub v0: Vec3,
    pub t_i: Pose,
    pub lambda: f64,
    /// `sqrt(cost / frames)`, meters.
    pub residual_rms: f64,
    /// `Σ ‖T_I P_I − λ P_c‖²` at the solution.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// JSON form of [`CalibrationResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationRecord {
    pub v0: [f64; 3],
    pub t_i: PoseRecord,
    pub lambda: f64,
    pub residual_rms: f64,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&CalibrationResult> for CalibrationRecord {
    fn from(c: &CalibrationResult) -> Self {
        Self {
            v0: c.v0.into(),
            t_i: PoseRecord::from(&c.t_i),
            lambda: c.lambda,
            residual_rms: c.residual_rms,
            cost: c.cost,
            iterations: c.iterations,
            converged: c.converged,
        }
    }
}

impl TryFrom<&CalibrationRecord> for CalibrationResult {
    type Error = Error;

    fn try_from(r: &CalibrationRecord) -> Result<Self> {
        if !(r.lambda > 0.0) {
            return Err(Error::invalid("calibration lambda must be positive"));
        }
        Ok(Self {
            v0: r.v0.into(),
            t_i: Pose::try_from(&r.t_i)?,
            lambda: r.lambda,
            residual_rms: r.residual_rms,
            cost: r.cost,
            iterations: r.iterations,
            converged: r.converged,
        })
    }
}

/// For each SfM frame, the index of the nearest IMU timestamp.
pub fn associate(imu_times: &[f64], frame_times: &[f64], max_gap: f64) -> Result<Vec<usize>> {
    frame_times
        .iter()
        .map(|&t| match nearest_index(imu_times, t) {
            Some((j, gap)) if gap <= max_gap => Ok(j),
            _ => Err(Error::AssociationGap { t, max_gap }),
        })
        .collect()
}

struct Problem<'a> {
    seq: &'a ImuSequence,
    idx: Vec<usize>,
    targets: Vec<Vec3>,
}

impl Problem<'_> {
    fn unpack(x: &DVector<f64>) -> (Vec3, Pose, f64) {
        let v0 = Vec3::new(x[0], x[1], x[2]);
        let rot = quat_exp(&Vec3::new(x[3], x[4], x[5]));
        let t = Vec3::new(x[6], x[7], x[8]);
        (v0, Pose::new(rot, t), x[9].exp())
    }

    fn pack(v0: &Vec3, t_i: &Pose, lambda: f64) -> DVector<f64> {
        let r = quat_log(&t_i.rotation);
        let t = t_i.translation;
        DVector::from_vec(vec![
            v0.x,
            v0.y,
            v0.z,
            r.x,
            r.y,
            r.z,
            t.x,
            t.y,
            t.z,
            lambda.ln(),
        ])
    }

    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        let (v0, t_i, lambda) = Self::unpack(x);
        let dr = integrate(self.seq, v0).expect("sequence validated");
        let mut r = DVector::zeros(3 * self.idx.len());
        for (k, (&j, c)) in self.idx.iter().zip(&self.targets).enumerate() {
            let e = t_i.transform_point(&dr.positions[j]) - c * lambda;
            r.fixed_rows_mut::<3>(3 * k).copy_from(&e);
        }
        r
    }
}

/// Solves for `(v0, T_I, λ)`; see the module docs.
pub fn solve_calibration(
    seq: &ImuSequence,
    sfm: &PoseTrajectory,
    opts: &CalibrationOptions,
) -> Result<CalibrationResult> {
    if sfm.scaled {
        return Err(Error::invalid("SfM trajectory is already metric"));
    }
    if sfm.len() < MIN_FRAMES {
        return Err(Error::Underdetermined {
            needed: MIN_FRAMES,
            got: sfm.len(),
        });
    }
    seq.require(2)?;
    let imu_times = seq.timestamps();
    let idx = associate(&imu_times, sfm.timestamps(), opts.max_gap)?;
    let centers: Vec<Vec3> = sfm.poses().iter().map(|p| p.translation).collect();

    let base = integrate(seq, Vec3::zeros())?;
    let taus: Vec<f64> = idx.iter().map(|&j| imu_times[j] - imu_times[0]).collect();
    let imu_pts: Vec<Vec3> = idx.iter().map(|&j| base.positions[j]).collect();

    let (idx, targets) = if opts.endpoint_only {
        (vec![*idx.last().unwrap()], vec![*centers.last().unwrap()])
    } else {
        (idx, centers.clone())
    };
    let problem = Problem {
        seq,
        idx,
        targets,
    };
    let lm_opts = LmOptions {
        max_iterations: opts.max_iterations,
        ..LmOptions::default()
    };

    let path_ratio = {
        let l_imu: f64 = imu_pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        let l_sfm: f64 = centers.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        if l_imu > 0.0 && l_sfm > 0.0 {
            l_imu / l_sfm
        } else {
            1.0
        }
    };

    let mut starts = vec![Problem::pack(&Vec3::zeros(), &Pose::identity(), path_ratio)];
    if let Some((v0, t_i, lambda)) = closed_form(&imu_pts, &centers, &taus) {
        starts.push(Problem::pack(&v0, &t_i, lambda));
    }

    let run = |x0: DVector<f64>| lm::minimize(|x| problem.residuals(x), x0, &lm_opts);
    let pick = |a: lm::LmReport, b: lm::LmReport| {
        let key = |r: &lm::LmReport| (!r.converged, r.cost);
        if key(&b).partial_cmp(&key(&a)) == Some(std::cmp::Ordering::Less) {
            b
        } else {
            a
        }
    };
    let mut best = starts.into_iter().map(run).reduce(pick).unwrap();
    let mut iterations = best.iterations;

    if !best.converged {
        let mut rng = Pcg64::new(opts.seed as u128, 0x0a02_bdbf_7bb3_c0a7_ac28_fa16_a64a_bf96);
        for _ in 0..opts.restarts {
            let rot = random_rotation(&mut rng);
            let rep = run(Problem::pack(
                &Vec3::zeros(),
                &Pose::new(rot, Vec3::zeros()),
                path_ratio,
            ));
            iterations += rep.iterations;
            best = pick(best, rep);
        }
    }

    let (v0, t_i, lambda) = Problem::unpack(&best.params);
    let frames = problem.idx.len() as f64;
    Ok(CalibrationResult {
        v0,
        t_i,
        lambda,
        residual_rms: (best.cost / frames).sqrt(),
        cost: best.cost,
        iterations,
        converged: best.converged,
    })
}

/// Global optimum of the all-frames objective by detrended similarity
/// alignment; `None` when the detrended SfM points collapse.
fn closed_form(imu: &[Vec3], sfm: &[Vec3], taus: &[f64]) -> Option<(Vec3, Pose, f64)> {
    let detrend = |pts: &[Vec3]| -> Option<(Vec<Vec3>, Vec3, Vec3)> {
        // Least-squares fit pts ≈ b + u τ per coordinate.
        let n = taus.len() as f64;
        let st: f64 = taus.iter().sum();
        let stt: f64 = taus.iter().map(|t| t * t).sum();
        let det = n * stt - st * st;
        if det.abs() <= f64::EPSILON * n * stt {
            return None;
        }
        let sp: Vec3 = pts.iter().sum();
        let stp: Vec3 = pts.iter().zip(taus).map(|(p, t)| p * *t).sum();
        let u = (stp * n - sp * st) / det;
        let b = (sp - u * st) / n;
        let rest = pts.iter().zip(taus).map(|(p, t)| p - b - u * *t).collect();
        Some((rest, b, u))
    };
    let (imu_rest, _, _) = detrend(imu)?;
    let (sfm_rest, _, _) = detrend(sfm)?;
    // imu_rest ≈ s Q sfm_rest with Q = Rᵀ and s = λ.
    let sim = umeyama(&sfm_rest, &imu_rest).ok()?;
    let lambda = sim.scale;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return None;
    }
    let q = sim.rotation;
    // What remains must be affine in τ: imu − λ Q sfm ≈ b + u τ.
    let remainder: Vec<Vec3> = imu
        .iter()
        .zip(sfm)
        .map(|(a, c)| a - q * c * lambda)
        .collect();
    let (_, b, u) = detrend(&remainder)?;
    let rot: UnitQuaternion = q.inverse();
    let t = -(rot * b);
    Some((-u, Pose::new(rot, t), lambda))
}

fn random_rotation(rng: &mut Pcg64) -> UnitQuaternion {
    // Shoemake's uniform sampling.
    let u = |rng: &mut Pcg64| (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let (u1, u2, u3) = (u(rng), u(rng), u(rng));
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(
        b * (tau * u3).cos(),
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
    ))
}

/// Multiplies every translation by `lambda` and marks the result metric.
pub fn apply_scale(sfm: &PoseTrajectory, lambda: f64) -> Result<PoseTrajectory> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!(
            "scale must be positive, got {lambda}"
        )));
    }
    let mut out = sfm.map_poses(|p| Pose::new(p.rotation, p.translation * lambda));
    out.scaled = true;
    Ok(out)
}
