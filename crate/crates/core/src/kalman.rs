//! Extended Kalman filter fusing IMU prediction with metric SfM poses.
//!
//! State `x = [x, y, z, qw, qx, qy, qz, vx, vy, vz]` holds camera position,
//! orientation (camera-to-world, scalar first) and velocity in the metric SfM
//! world frame. The quaternion is carried additively and renormalized after
//! every step.
//!
//! Prediction integrates one IMU sample (body-frame acceleration and angular
//! rate; gravity already removed):
//!
//! ```text
//! a_w = R(q) a
//! p'  = p + v dt + ½ a_w dt²
//! v'  = v + a_w dt
//! q'  = q ⊗ exp(½ ω dt)
//! P'  = F P Fᵀ + Q          F = ∂f/∂x by central differences
//! ```
//!
//! The update observes position and quaternion directly, `H = [I₇ | 0]`:
//!
//! ```text
//! y = z − H x       S = H P Hᵀ + R       K = P Hᵀ S⁻¹
//! x ← x + K y       P ← (I − K H) P
//! ```

use nalgebra::{DMatrix, SMatrix, SVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationResult;
use crate::dead_reckoning::integrate;
use crate::error::{Error, Result};
use crate::geometry::{quat_exp, quat_to_wxyz, Pose, UnitQuaternion, Vec3};
use crate::trajectory::{nearest_index, ImuSample, ImuSequence, PoseTrajectory};

pub const STATE_DIM: usize = 10;
pub const OBS_DIM: usize = 7;

pub type StateVector = SVector<f64, STATE_DIM>;
pub type StateCov = SMatrix<f64, STATE_DIM, STATE_DIM>;
pub type ObsVector = SVector<f64, OBS_DIM>;
pub type ObsCov = SMatrix<f64, OBS_DIM, OBS_DIM>;
pub type Gain = SMatrix<f64, STATE_DIM, OBS_DIM>;

/// Largest innovation-covariance condition number accepted by an update.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;
const JACOBIAN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanConfig {
    pub q: StateCov,
    pub r: ObsCov,
    pub p0_scale: f64,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        Self::from_scales(0.01, 0.1, 0.1)
    }
}

impl KalmanConfig {
    /// Isotropic `Q = q·I₁₀`, `R = r·I₇`, `P₀ = p0·I₁₀`.
    pub fn from_scales(q: f64, r: f64, p0: f64) -> Self {
        Self {
            q: StateCov::identity() * q,
            r: ObsCov::identity() * r,
            p0_scale: p0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn psd<const N: usize>(m: &SMatrix<f64, N, N>, name: &str) -> Result<()> {
            if (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
                return Err(Error::invalid(format!("{name} must be symmetric")));
            }
            let eig = SymmetricEigen::new(DMatrix::from_column_slice(N, N, m.as_slice()));
            if eig.eigenvalues.min() < -1e-12 {
                return Err(Error::invalid(format!("{name} must be positive semidefinite")));
            }
            Ok(())
        }
        psd(&self.q, "Q")?;
        psd(&self.r, "R")?;
        if !(self.p0_scale >= 0.0) {
            return Err(Error::invalid("P0 scale must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub x: StateVector,
    pub p: StateCov,
}

impl KalmanState {
    pub fn position(&self) -> Vec3 {
        self.x.fixed_rows::<3>(0).into_owned()
    }

    pub fn quaternion(&self) -> UnitQuaternion {
        quat_from_state(&self.x)
    }

    pub fn velocity(&self) -> Vec3 {
        self.x.fixed_rows::<3>(7).into_owned()
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.quaternion(), self.position())
    }

    fn normalize_quaternion(&mut self) {
        let n = self.x.fixed_rows::<4>(3).norm();
        self.x.fixed_rows_mut::<4>(3).unscale_mut(n);
    }
}

fn quat_from_state(x: &StateVector) -> UnitQuaternion {
    UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(x[3], x[4], x[5], x[6]))
}

fn symmetrize(p: &mut StateCov) {
    *p = (*p + p.transpose()) * 0.5;
}

pub fn ekf_init(pose0: &Pose, v0: &Vec3, cfg: &KalmanConfig) -> KalmanState {
    let q = quat_to_wxyz(&pose0.rotation);
    let t = pose0.translation;
    let x = StateVector::from_column_slice(&[
        t.x, t.y, t.z, q[0], q[1], q[2], q[3], v0.x, v0.y, v0.z,
    ]);
    KalmanState {
        x,
        p: StateCov::identity() * cfg.p0_scale,
    }
}

/// State transition for one IMU sample held over `dt`.
pub fn transition(x: &StateVector, u: &ImuSample, dt: f64) -> StateVector {
    let q_raw = nalgebra::Quaternion::new(x[3], x[4], x[5], x[6]);
    let a_w = UnitQuaternion::from_quaternion(q_raw) * u.linear_accel;
    let p = x.fixed_rows::<3>(0);
    let v = x.fixed_rows::<3>(7);
    let p_new = p + v * dt + a_w * (0.5 * dt * dt);
    let v_new = v + a_w * dt;
    let q_new = q_raw * quat_exp(&(u.angular_vel * dt)).into_inner();
    let mut out = StateVector::zeros();
    out.fixed_rows_mut::<3>(0).copy_from(&p_new);
    out[3] = q_new.w;
    out[4] = q_new.i;
    out[5] = q_new.j;
    out[6] = q_new.k;
    out.fixed_rows_mut::<3>(7).copy_from(&v_new);
    out
}

/// `∂f/∂x` by central differences.
pub fn transition_jacobian(x: &StateVector, u: &ImuSample, dt: f64) -> StateCov {
    let mut jac = StateCov::zeros();
    let mut xp = *x;
    for j in 0..STATE_DIM {
        let h = JACOBIAN_STEP * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let fp = transition(&xp, u, dt);
        xp[j] = x[j] - h;
        let fm = transition(&xp, u, dt);
        xp[j] = x[j];
        jac.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    jac
}

pub fn ekf_predict(
    s: &KalmanState,
    u: &ImuSample,
    dt: f64,
    cfg: &KalmanConfig,
) -> Result<KalmanState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    let f = transition_jacobian(&s.x, u, dt);
    let mut next = KalmanState {
        x: transition(&s.x, u, dt),
        p: f * s.p * f.transpose() + cfg.q,
    };
    symmetrize(&mut next.p);
    next.normalize_quaternion();
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub state: KalmanState,
    pub innovation: ObsVector,
    pub gain: Gain,
}

/// Observation vector for `obs`, its quaternion sign-aligned with `reference`.
pub fn observation_vector(obs: &Pose, reference: &UnitQuaternion) -> ObsVector {
    let mut q = quat_to_wxyz(&obs.rotation);
    let r = quat_to_wxyz(reference);
    if q.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() < 0.0 {
        q = q.map(|c| -c);
    }
    let t = obs.translation;
    ObsVector::from_column_slice(&[t.x, t.y, t.z, q[0], q[1], q[2], q[3]])
}

pub fn ekf_update(s: &KalmanState, obs: &Pose, cfg: &KalmanConfig) -> Result<UpdateOutcome> {
    let z = observation_vector(obs, &s.quaternion());
    let hx: ObsVector = s.x.fixed_rows::<OBS_DIM>(0).into_owned();
    let y = z - hx;
    let p_ht: Gain = s.p.fixed_columns::<OBS_DIM>(0).into_owned();
    let mut innov_cov: ObsCov = s.p.fixed_view::<OBS_DIM, OBS_DIM>(0, 0).into_owned() + cfg.r;
    innov_cov = (innov_cov + innov_cov.transpose()) * 0.5;

    let eig = SymmetricEigen::new(innov_cov).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_INNOVATION_CONDITION) {
        return Err(Error::DegenerateInnovation { condition });
    }
    let s_inv = innov_cov
        .try_inverse()
        .ok_or(Error::DegenerateInnovation { condition })?;
    let gain = p_ht * s_inv;

    let mut ikh = StateCov::identity();
    ikh.fixed_columns_mut::<OBS_DIM>(0).sub_assign(&gain);
    let mut state = KalmanState {
        x: s.x + gain * y,
        p: ikh * s.p,
    };
    symmetrize(&mut state.p);
    state.normalize_quaternion();
    Ok(UpdateOutcome {
        state,
        innovation: y,
        gain,
    })
}

use std::ops::SubAssign;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionOptions {
    /// Largest SfM-to-IMU timestamp gap before an observation is dropped.
    pub max_gap: f64,
    /// Seconds of leading frames used to estimate the camera mount rotation.
    pub mount_window: f64,
}

impl Default for FusionOptions {
    fn default() -> Self {
        Self {
            max_gap: 0.010,
            mount_window: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FusionOutput {
    pub trajectory: PoseTrajectory,
    pub innovations: Vec<ObsVector>,
    /// Observations with no IMU sample within `max_gap`.
    pub dropped: usize,
    /// Camera orientation relative to the IMU body.
    pub mount: UnitQuaternion,
}

/// Body orientation from integrating the gyro, one entry per sample.
pub fn integrate_gyro(seq: &ImuSequence) -> Vec<UnitQuaternion> {
    let s = seq.samples();
    let mut q = UnitQuaternion::identity();
    let mut out = Vec::with_capacity(s.len());
    out.push(q);
    for w in s.windows(2) {
        q *= quat_exp(&(w[0].angular_vel * (w[1].t - w[0].t)));
        out.push(q);
    }
    out
}

fn associate_frames(imu_t: &[f64], sfm: &PoseTrajectory, max_gap: f64) -> Vec<Option<usize>> {
    sfm.timestamps()
        .iter()
        .map(|&t| nearest_index(imu_t, t).filter(|&(_, g)| g <= max_gap).map(|(j, _)| j))
        .collect()
}

fn estimate_mount(
    body: &[UnitQuaternion],
    imu_t: &[f64],
    sfm: &PoseTrajectory,
    assoc: &[Option<usize>],
    t_i: &Pose,
    window: f64,
) -> UnitQuaternion {
    let t0 = imu_t[0];
    let mut sum = nalgebra::Quaternion::new(0.0, 0.0, 0.0, 0.0);
    let mut first: Option<nalgebra::Quaternion<f64>> = None;
    for (pose, j) in sfm.poses().iter().zip(assoc) {
        let Some(j) = *j else { continue };
        if first.is_some() && imu_t[j] - t0 > window {
            break;
        }
        let m = (body[j].inverse() * t_i.rotation.inverse() * pose.rotation).into_inner();
        let r = *first.get_or_insert(m);
        sum += if m.dot(&r) < 0.0 { -m } else { m };
    }
    UnitQuaternion::try_new(sum, 1e-12).unwrap_or_else(UnitQuaternion::identity)
}

/// Runs the filter over an IMU stream, updating at every SfM frame.
///
/// The filter starts from the IMU's initial pose mapped through `T_I`. Body
/// measurements are rotated into camera axes by a mount rotation averaged
/// over the first `mount_window` seconds of frames. Output poses are the
/// posteriors at the SfM timestamps that could be associated.
pub fn fuse_trajectories(
    seq: &ImuSequence,
    sfm_scaled: &PoseTrajectory,
    calib: &CalibrationResult,
    cfg: &KalmanConfig,
    opts: &FusionOptions,
) -> Result<FusionOutput> {
    if !sfm_scaled.scaled {
        return Err(Error::invalid("fusion needs a metric (scaled) SfM trajectory"));
    }
    seq.require(2)?;
    cfg.validate()?;
    let imu_t = seq.timestamps();
    let assoc = associate_frames(&imu_t, sfm_scaled, opts.max_gap);
    let dropped = assoc.iter().filter(|a| a.is_none()).count();
    if dropped == assoc.len() {
        return Err(Error::NoObservations);
    }

    let body = integrate_gyro(seq);
    let mount = estimate_mount(&body, &imu_t, sfm_scaled, &assoc, &calib.t_i, opts.mount_window);
    let to_cam = mount.inverse();
    let inputs: Vec<ImuSample> = seq
        .samples()
        .iter()
        .map(|s| ImuSample::new(s.t, to_cam * s.linear_accel, to_cam * s.angular_vel))
        .collect();

    let start = Pose::new(calib.t_i.rotation * mount, calib.t_i.translation);
    let mut state = ekf_init(&start, &(calib.t_i.rotation * calib.v0), cfg);

    // Frame indices grouped by IMU sample.
    let mut by_sample: Vec<Vec<usize>> = vec![Vec::new(); inputs.len()];
    for (k, j) in assoc.iter().enumerate() {
        if let Some(j) = j {
            by_sample[*j].push(k);
        }
    }

    let mut fused = vec![None; sfm_scaled.len()];
    let mut innovations = Vec::new();
    for j in 0..inputs.len() {
        for &k in &by_sample[j] {
            let out = ekf_update(&state, &sfm_scaled.poses()[k], cfg)?;
            state = out.state;
            innovations.push(out.innovation);
            fused[k] = Some(state.pose());
        }
        if j + 1 < inputs.len() {
            state = ekf_predict(&state, &inputs[j], inputs[j + 1].t - inputs[j].t, cfg)?;
        }
    }

    let (ts, poses): (Vec<f64>, Vec<Pose>) = sfm_scaled
        .iter()
        .zip(fused)
        .filter_map(|((t, _), p)| p.map(|p| (t, p)))
        .unzip();
    let trajectory =
        PoseTrajectory::new(ts, poses, true)?.with_point_count(sfm_scaled.point_count);
    Ok(FusionOutput {
        trajectory,
        innovations,
        dropped,
        mount,
    })
}

/// Pure IMU trajectory at `times`: dead-reckoned positions mapped through
/// `T_I`, orientation from the integrated gyro.
pub fn dead_reckoned_poses(
    seq: &ImuSequence,
    calib: &CalibrationResult,
    times: &[f64],
    max_gap: f64,
) -> Result<PoseTrajectory> {
    let dr = integrate(seq, calib.v0)?;
    let body = integrate_gyro(seq);
    let idx = crate::calibration::associate(&dr.timestamps, times, max_gap)?;
    let poses = idx
        .iter()
        .map(|&j| {
            Pose::new(
                calib.t_i.rotation * body[j],
                calib.t_i.transform_point(&dr.positions[j]),
            )
        })
        .collect();
    PoseTrajectory::new(times.to_vec(), poses, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::quat_geodesic_angle;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn sample(a: Vec3, w: Vec3) -> ImuSample {
        ImuSample::new(0.0, a, w)
    }

    #[test]
    fn paper_constants() {
        let cfg = KalmanConfig::default();
        assert_eq!(cfg.q, StateCov::identity() * 0.01);
        assert_eq!(cfg.r, ObsCov::identity() * 0.1);
        let s = ekf_init(&Pose::identity(), &Vec3::zeros(), &cfg);
        assert_eq!(s.p, StateCov::identity() * 0.1);
        assert_eq!(
            s.x.as_slice(),
            &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn init_examples() {
        let cfg = KalmanConfig {
            p0_scale: 0.5,
            ..Default::default()
        };
        let s = ekf_init(&Pose::from_translation(Vec3::new(1.0, 2.0, 3.0)), &Vec3::z(), &cfg);
        assert_eq!(&s.x.as_slice()[..3], &[1.0, 2.0, 3.0]);
        assert_eq!(s.velocity(), Vec3::z());
        assert_eq!(s.p, StateCov::identity() * 0.5);
    }

    #[test]
    fn predict_at_rest() {
        let cfg = KalmanConfig::default();
        let s = ekf_init(&Pose::identity(), &Vec3::zeros(), &cfg);
        let u = sample(Vec3::zeros(), Vec3::zeros());
        let n = ekf_predict(&s, &u, 1.0, &cfg).unwrap();
        assert_eq!(n.x, s.x);
        let f = transition_jacobian(&s.x, &u, 1.0);
        assert!((n.p - (f * s.p * f.transpose()) - cfg.q).amax() < 1e-12);
        assert!(n.p.trace() >= s.p.trace() + cfg.q.trace() - 1e-12);
    }

    #[test]
    fn predict_rotation_matches_closed_form() {
        let cfg = KalmanConfig::default();
        let s = ekf_init(&Pose::identity(), &Vec3::zeros(), &cfg);
        let u = sample(Vec3::zeros(), Vec3::new(0.0, 0.0, FRAC_PI_2));
        let n = ekf_predict(&s, &u, 1.0, &cfg).unwrap();
        // exp(½ ω dt) for a quarter turn about z.
        let half = FRAC_PI_2 / 2.0;
        let expect = [half.cos(), 0.0, 0.0, half.sin()];
        let got = quat_to_wxyz(&n.quaternion());
        for (a, b) in got.iter().zip(expect) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn predict_translation() {
        let cfg = KalmanConfig::default();
        let s = ekf_init(&Pose::identity(), &Vec3::zeros(), &cfg);
        let n = ekf_predict(&s, &sample(Vec3::x(), Vec3::zeros()), 0.1, &cfg).unwrap();
        assert!((n.position() - Vec3::new(0.005, 0.0, 0.0)).norm() < 1e-15);
        assert!((n.velocity() - Vec3::new(0.1, 0.0, 0.0)).norm() < 1e-15);
        assert!(ekf_predict(&s, &sample(Vec3::x(), Vec3::zeros()), 0.0, &cfg).is_err());
        assert!(ekf_predict(&s, &sample(Vec3::x(), Vec3::zeros()), -1.0, &cfg).is_err());
    }

    #[test]
    fn acceleration_is_rotated_into_world() {
        let cfg = KalmanConfig::default();
        let yaw = UnitQuaternion::from_axis_angle(&Vec3::z_axis(), FRAC_PI_2);
        let s = ekf_init(&Pose::new(yaw, Vec3::zeros()), &Vec3::zeros(), &cfg);
        let n = ekf_predict(&s, &sample(Vec3::x(), Vec3::zeros()), 1.0, &cfg).unwrap();
        assert!((n.velocity() - Vec3::y()).norm() < 1e-12);
    }

    #[test]
    fn update_with_predicted_pose() {
        let cfg = KalmanConfig::default();
        let s = ekf_init(
            &Pose::new(UnitQuaternion::from_euler_angles(0.1, 0.2, 0.3), Vec3::new(1.0, 2.0, 3.0)),
            &Vec3::x(),
            &cfg,
        );
        let out = ekf_update(&s, &s.pose(), &cfg).unwrap();
        assert!(out.innovation.amax() < 1e-15);
        assert!((out.state.x - s.x).amax() < 1e-15);
        assert!(out.state.p.trace() < s.p.trace());
    }

    #[test]
    fn sign_flipped_observation_is_aligned() {
        let cfg = KalmanConfig::default();
        let s = ekf_init(&Pose::identity(), &Vec3::zeros(), &cfg);
        let flipped = Pose::new(
            UnitQuaternion::new_unchecked(-UnitQuaternion::identity().into_inner()),
            Vec3::zeros(),
        );
        let out = ekf_update(&s, &flipped, &cfg).unwrap();
        assert!(out.innovation.amax() < 1e-15);
    }

    #[test]
    fn huge_r_leaves_prior() {
        let mut cfg = KalmanConfig::default();
        let s = ekf_init(&Pose::identity(), &Vec3::zeros(), &cfg);
        cfg.r *= 1e9;
        let obs = Pose::new(UnitQuaternion::from_euler_angles(0.3, 0.0, 0.0), Vec3::new(5.0, -2.0, 1.0));
        let out = ekf_update(&s, &obs, &cfg).unwrap();
        assert!((out.state.x - s.x).amax() < 1e-6);
        assert!((out.state.p - s.p).amax() < 1e-6);
    }

    /// Scalar Kalman update worked by hand.
    fn scalar_update(prior: f64, p: f64, obs: f64, r: f64) -> (f64, f64, f64) {
        let k = p / (p + r);
        (k, prior + k * (obs - prior), (1.0 - k) * p)
    }

    #[test]
    fn scalar_analog() {
        let cfg = KalmanConfig::default();
        let s = ekf_init(&Pose::identity(), &Vec3::zeros(), &cfg);
        let obs = Pose::from_translation(Vec3::new(0.8, 0.0, 0.0));
        let out = ekf_update(&s, &obs, &cfg).unwrap();
        let (k, mean, var) = scalar_update(0.0, 0.1, 0.8, 0.1);
        assert_eq!(k, 0.5);
        assert!((out.gain[(0, 0)] - k).abs() < 1e-12);
        assert!((out.state.x[0] - mean).abs() < 1e-12);
        assert!((out.state.p[(0, 0)] - var).abs() < 1e-12);
    }

    #[test]
    fn singular_innovation_rejected() {
        let cfg = KalmanConfig::from_scales(0.0, 0.0, 0.0);
        let s = ekf_init(&Pose::identity(), &Vec3::zeros(), &cfg);
        assert!(matches!(
            ekf_update(&s, &Pose::identity(), &cfg),
            Err(Error::DegenerateInnovation { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = KalmanConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.q[(0, 1)] = 0.5;
        assert!(cfg.validate().is_err());
        let mut cfg = KalmanConfig::default();
        cfg.r[(2, 2)] = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn gyro_integration() {
        let seq = ImuSequence::new(
            (0..101)
                .map(|k| ImuSample::new(k as f64 * 0.01, Vec3::zeros(), Vec3::new(0.0, 0.0, FRAC_PI_2)))
                .collect(),
        )
        .unwrap();
        let body = integrate_gyro(&seq);
        let expect = UnitQuaternion::from_axis_angle(&Vec3::z_axis(), FRAC_PI_2);
        assert!(quat_geodesic_angle(&body[100], &expect) < 1e-12);
    }

    fn arb_step() -> impl Strategy<Value = (Vec3, Vec3, f64, Vec3, [f64; 4])> {
        let v3 = |r: f64| prop::array::uniform3(-r..r).prop_map(Vec3::from);
        (
            v3(5.0),
            v3(3.0),
            0.001f64..0.2,
            v3(2.0),
            prop::array::uniform4(-1.0f64..1.0),
        )
    }

    proptest! {
        #[test]
        fn trace_monotone_and_quaternion_unit((a, w, dt, dp, dq) in arb_step()) {
            let cfg = KalmanConfig::default();
            let s = ekf_init(
                &Pose::new(UnitQuaternion::from_euler_angles(dq[0], dq[1], dq[2]), dp),
                &(dp * 0.5),
                &cfg,
            );
            let pred = ekf_predict(&s, &sample(a, w), dt, &cfg).unwrap();
            prop_assert!(pred.p.trace() >= s.p.trace());
            prop_assert!((pred.x.fixed_rows::<4>(3).norm() - 1.0).abs() < 1e-9);
            let obs = Pose::new(
                UnitQuaternion::from_euler_angles(dq[3], dq[1], dq[0]),
                dp * 2.0 + a,
            );
            let upd = ekf_update(&pred, &obs, &cfg).unwrap().state;
            prop_assert!(upd.p.trace() <= pred.p.trace());
            prop_assert!((upd.x.fixed_rows::<4>(3).norm() - 1.0).abs() < 1e-9);
            prop_assert!((upd.p - upd.p.transpose()).amax() < 1e-9);
        }
    }
}
