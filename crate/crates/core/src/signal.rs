//! Frequency-domain Butterworth filtering and IMU quality gating.
//!
//! Filtering is a magnitude mask on DFT bins: the signal is transformed, each
//! bin is multiplied by the Butterworth power response evaluated at the bin's
//! absolute frequency, and the result is transformed back. With
//! `r = (f / f_c)^(2n)` the two responses are
//!
//! ```text
//! H_low(f)  = 1 / (1 + r)
//! H_high(f) = r / (1 + r)
//! ```
//!
//! so a low-pass and a high-pass with the same cutoff and order sum to the
//! identity. No IIR filter is realized; the mask is zero-phase and assumes the
//! window is one period of a periodic signal.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::trajectory::{ImuSample, ImuSequence, PoseTrajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    LowPass,
    HighPass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub cutoff_hz: f64,
    pub order: u32,
    pub kind: FilterKind,
}

impl FilterSpec {
    pub fn new(cutoff_hz: f64, order: u32, kind: FilterKind) -> Result<Self> {
        let spec = Self {
            cutoff_hz,
            order,
            kind,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn low_pass(cutoff_hz: f64, order: u32) -> Result<Self> {
        Self::new(cutoff_hz, order, FilterKind::LowPass)
    }

    pub fn high_pass(cutoff_hz: f64, order: u32) -> Result<Self> {
        Self::new(cutoff_hz, order, FilterKind::HighPass)
    }

    fn validate(&self) -> Result<()> {
        if !(self.cutoff_hz.is_finite() && self.cutoff_hz > 0.0) {
            return Err(Error::invalid(format!(
                "cutoff must be positive, got {}",
                self.cutoff_hz
            )));
        }
        if self.order == 0 {
            return Err(Error::invalid("filter order must be at least 1"));
        }
        Ok(())
    }

    /// Power response at absolute frequency `freq_hz`.
    pub fn gain(&self, freq_hz: f64) -> f64 {
        let r = (freq_hz.abs() / self.cutoff_hz).powi(2 * self.order as i32);
        match self.kind {
            FilterKind::LowPass => 1.0 / (1.0 + r),
            // r / (1 + r), written so that r = inf still yields 1.
            FilterKind::HighPass => 1.0 / (1.0 + r.recip()),
        }
    }
}

/// Absolute frequency of DFT bin `k` for an `n`-point transform.
pub fn bin_frequency(k: usize, n: usize, sample_rate: f64) -> f64 {
    let k = k.min(n - k);
    k as f64 * sample_rate / n as f64
}

/// Applies `spec` to a uniformly sampled real signal through the DFT.
pub fn fft_filter(signal: &[f64], sample_rate: f64, spec: &FilterSpec) -> Result<Vec<f64>> {
    spectral_mask(signal, sample_rate, |f| spec.gain(f))
}

/// Multiplies every DFT bin by `mask(|f|)` and transforms back.
pub fn spectral_mask(
    signal: &[f64],
    sample_rate: f64,
    mask: impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    if signal.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: signal.len(),
        });
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("signal"));
    }
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    let n = signal.len();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&v| Complex::new(v, 0.0)).collect();
    forward.process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        *c *= mask(bin_frequency(k, n, sample_rate));
    }
    inverse.process(&mut buf);
    let scale = 1.0 / n as f64;
    // The mask is even in frequency, so the imaginary residue is rounding only.
    Ok(buf.iter().map(|c| c.re * scale).collect())
}

/// Linearly interpolates every channel onto a uniform grid `t0 + i / rate`
/// covering `[t0, t_end]`.
pub fn resample_uniform(seq: &ImuSequence, rate: f64) -> Result<ImuSequence> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::invalid(format!("rate must be positive, got {rate}")));
    }
    seq.require(2)?;
    let s = seq.samples();
    let t0 = s[0].t;
    let t_end = s[s.len() - 1].t;
    let span = (t_end - t0) * rate;
    // Tolerate rounding in timestamps that were written with finite precision.
    let count = (span + 1e-6).floor() as usize + 1;

    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    for i in 0..count {
        let t = t0 + i as f64 / rate;
        while seg + 2 < s.len() && s[seg + 1].t <= t {
            seg += 1;
        }
        let (a, b) = (&s[seg], &s[seg + 1]);
        let w = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
        out.push(ImuSample::new(
            t,
            a.linear_accel.lerp(&b.linear_accel, w),
            a.angular_vel.lerp(&b.angular_vel, w),
        ));
    }
    ImuSequence::new(out)
}

/// Sample rate of a uniformly sampled sequence.
pub fn uniform_rate(seq: &ImuSequence) -> Result<f64> {
    seq.require(2)?;
    let ts = seq.timestamps();
    let dt = (ts[ts.len() - 1] - ts[0]) / (ts.len() - 1) as f64;
    let max_dev = ts
        .windows(2)
        .map(|w| ((w[1] - w[0]) - dt).abs())
        .fold(0.0, f64::max);
    if max_dev > 1e-6 * dt.max(1e-3) {
        return Err(Error::invalid(
            "IMU sequence is not uniformly sampled; resample it first",
        ));
    }
    Ok(1.0 / dt)
}

/// Gravity and noise cutoffs for [`bandpass_accel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandpassConfig {
    pub gravity_cutoff_hz: f64,
    pub noise_cutoff_hz: f64,
    pub order: u32,
}

impl Default for BandpassConfig {
    fn default() -> Self {
        Self {
            gravity_cutoff_hz: 0.1,
            noise_cutoff_hz: 15.0,
            order: 4,
        }
    }
}

impl BandpassConfig {
    pub fn specs(&self) -> Result<(FilterSpec, FilterSpec)> {
        if self.gravity_cutoff_hz >= self.noise_cutoff_hz {
            return Err(Error::invalid("gravity cutoff must lie below the noise cutoff"));
        }
        Ok((
            FilterSpec::high_pass(self.gravity_cutoff_hz, self.order)?,
            FilterSpec::low_pass(self.noise_cutoff_hz, self.order)?,
        ))
    }

    pub fn apply(&self, seq: &ImuSequence) -> Result<ImuSequence> {
        let (hp, lp) = self.specs()?;
        bandpass_accel(seq, &hp, &lp)
    }
}

/// High-passes then low-passes each acceleration axis; angular velocity is
/// passed through.
pub fn bandpass_accel(
    seq: &ImuSequence,
    gravity_cut: &FilterSpec,
    noise_cut: &FilterSpec,
) -> Result<ImuSequence> {
    if gravity_cut.kind != FilterKind::HighPass || noise_cut.kind != FilterKind::LowPass {
        return Err(Error::invalid(
            "gravity cut must be high-pass and noise cut low-pass",
        ));
    }
    let rate = uniform_rate(seq)?;
    let mut axes = [Vec::new(), Vec::new(), Vec::new()];
    for (axis, out) in axes.iter_mut().enumerate() {
        let raw: Vec<f64> = seq.samples().iter().map(|s| s.linear_accel[axis]).collect();
        let hp = fft_filter(&raw, rate, gravity_cut)?;
        *out = fft_filter(&hp, rate, noise_cut)?;
    }
    let mut k = 0;
    Ok(seq.map_accel(|_| {
        let a = Vec3::new(axes[0][k], axes[1][k], axes[2][k]);
        k += 1;
        a
    }))
}

/// How the scalar IMU variance is formed from vector samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    /// Population variance of the acceleration magnitude `‖a_t‖`.
    #[default]
    Magnitude,
    /// Sum of the per-axis population variances.
    PerAxisSum,
}

fn population_variance(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

pub fn imu_variance(seq: &ImuSequence, mode: VarianceMode) -> Result<f64> {
    seq.require(1)?;
    let s = seq.samples();
    Ok(match mode {
        VarianceMode::Magnitude => population_variance(s.iter().map(|x| x.linear_accel.norm())),
        VarianceMode::PerAxisSum => (0..3)
            .map(|axis| population_variance(s.iter().map(move |x| x.linear_accel[axis])))
            .sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityThresholds {
    pub min_points: u64,
    pub max_variance: f64,
    #[serde(default)]
    pub variance_mode: VarianceMode,
}

impl Default for QualityThresholds {
    fn default() -> Self {
        Self {
            min_points: 100,
            max_variance: 10.0,
            variance_mode: VarianceMode::Magnitude,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateFailure {
    Points,
    Variance,
}

impl GateFailure {
    pub fn as_str(&self) -> &'static str {
        match self {
            GateFailure::Points => "points",
            GateFailure::Variance => "variance",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateOutcome {
    Pass,
    Fail(Vec<GateFailure>),
}

impl GateOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, GateOutcome::Pass)
    }

    /// `"ok"`, or `"rejected:<reason>[+<reason>]"`.
    pub fn status(&self) -> String {
        match self {
            GateOutcome::Pass => "ok".into(),
            GateOutcome::Fail(r) => {
                let names: Vec<_> = r.iter().map(GateFailure::as_str).collect();
                format!("rejected:{}", names.join("+"))
            }
        }
    }
}

/// Keeps a clip iff it has enough reconstructed points and a calm enough IMU.
pub fn quality_gate(
    traj: &PoseTrajectory,
    seq: &ImuSequence,
    thr: &QualityThresholds,
) -> Result<GateOutcome> {
    let points = traj.point_count.ok_or(Error::NoSfmDiagnostics)?;
    let variance = imu_variance(seq, thr.variance_mode)?;
    let mut failed = Vec::new();
    if points < thr.min_points {
        failed.push(GateFailure::Points);
    }
    if variance > thr.max_variance {
        failed.push(GateFailure::Variance);
    }
    Ok(if failed.is_empty() {
        GateOutcome::Pass
    } else {
        GateOutcome::Fail(failed)
    })
}
