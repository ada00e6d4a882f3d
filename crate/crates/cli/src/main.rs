use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use egokin::calibration::{apply_scale, solve_calibration, CalibrationOptions, CalibrationRecord, CalibrationResult};
use egokin::curation::{
    apply_strategy, five_point_stats, histogram_stats, ingest_metadata, motion_smoothness,
    motion_strength, write_metadata, Decision, FivePointStats, StrategyConfig,
};
use egokin::eval::{evaluate, AlignMode};
use egokin::io::{read_imu_csv, read_trajectory, write_imu_csv, write_plk, write_trajectory};
use egokin::kalman::{fuse_trajectories, FusionOptions, KalmanConfig};
use egokin::pipeline::{annotate, read_flow_dir, read_manifest, PipelineConfig};
use egokin::pluecker::{embed_trajectory, relative_trajectory, Intrinsics, PixelSampling};
use egokin::signal::{resample_uniform, BandpassConfig};
use egokin::sim::{generate, oracle_on_bundle, OracleConfig, SimProfile};

#[derive(Parser)]
#[command(name = "egokin", version, about = "Kinematic annotation and curation for egocentric clips")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Remove gravity and high-frequency noise from IMU acceleration.
    FilterImu(FilterImu),
    /// Estimate initial velocity, IMU-to-world transform and SfM scale.
    Calibrate(Calibrate),
    /// Fuse IMU and scaled SfM poses with the Kalman filter.
    Fuse(Fuse),
    /// Render per-pixel Plücker embeddings of a pose trajectory.
    Pluecker(Pluecker),
    /// Per-clip motion metrics.
    #[command(subcommand)]
    Metrics(Metrics),
    /// Apply a cleaning strategy to metadata records.
    Clean(Clean),
    /// Histogram one metadata field.
    Stats(Stats),
    /// Trajectory evaluation.
    #[command(subcommand)]
    Eval(Eval),
    /// Generate a synthetic clip with known ground truth.
    Simulate(Simulate),
    /// Run the full pipeline over a manifest of clips.
    Annotate(Annotate),
}

#[derive(Args)]
struct FilterImu {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Resample onto this uniform rate first (Hz).
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    gravity_cut: f64,
    #[arg(long, default_value_t = 15.0)]
    noise_cut: f64,
    #[arg(long, default_value_t = 4)]
    order: u32,
}

#[derive(Args)]
struct Calibrate {
    #[arg(long)]
    imu: PathBuf,
    #[arg(long)]
    sfm: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Fit only the last frame.
    #[arg(long)]
    endpoint_only: bool,
    #[arg(long, default_value_t = 0.010)]
    max_gap: f64,
}

#[derive(Args)]
struct Fuse {
    #[arg(long)]
    imu: PathBuf,
    #[arg(long)]
    sfm: PathBuf,
    #[arg(long)]
    calib: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    q: f64,
    #[arg(long, default_value_t = 0.1)]
    r: f64,
    #[arg(long, default_value_t = 0.1)]
    p0: f64,
    #[arg(long, default_value_t = 0.010)]
    max_gap: f64,
}

#[derive(Args)]
struct Pluecker {
    #[arg(long)]
    poses: PathBuf,
    #[arg(long)]
    fx: f64,
    #[arg(long)]
    fy: f64,
    #[arg(long)]
    cx: f64,
    #[arg(long)]
    cy: f64,
    #[arg(long)]
    width: u32,
    #[arg(long)]
    height: u32,
    #[arg(long)]
    out: PathBuf,
    /// Sample integer pixel coordinates instead of pixel centers.
    #[arg(long)]
    corner: bool,
    /// Embed poses as given instead of relative to the first frame.
    #[arg(long)]
    absolute: bool,
}

#[derive(Subcommand)]
enum Metrics {
    /// Mean flow and five-point proportions of a directory of FLW1 maps.
    Flow {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Defaults to the directory name.
        #[arg(long)]
        clip_id: Option<String>,
    },
    /// Translation and rotation smoothness of a trajectory.
    Smoothness {
        #[arg(long)]
        poses: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Clean {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Preset 1, 2 or 3.
    #[arg(long, conflicts_with = "config")]
    strategy: Option<u8>,
    /// JSON threshold set.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dropped clips and their reasons, one JSON object per line.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Count only the ≥ 16 px bin in the rescue rule.
    #[arg(long)]
    p16_only: bool,
    /// Skip malformed lines instead of failing.
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
struct Stats {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    field: String,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    lenient: bool,
}

#[derive(Subcommand)]
enum Eval {
    /// RotErr and TransErr of a generated trajectory against ground truth.
    Poses {
        #[arg(long)]
        gen: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Similarity-align over all frames instead of the first frame.
        #[arg(long)]
        umeyama: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Simulate {
    #[arg(long)]
    profile: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Also run the full pipeline and write its report here.
    #[arg(long)]
    oracle: Option<PathBuf>,
}

#[derive(Args)]
struct Annotate {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    write_text(path, &text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn read_calib(path: &Path) -> Result<CalibrationResult> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let rec: CalibrationRecord =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(CalibrationResult::try_from(&rec)?)
}

fn filter_imu(a: FilterImu) -> Result<()> {
    let mut seq = read_imu_csv(&a.input)?;
    if let Some(rate) = a.rate {
        seq = resample_uniform(&seq, rate)?;
    }
    let cfg = BandpassConfig {
        gravity_cutoff_hz: a.gravity_cut,
        noise_cutoff_hz: a.noise_cut,
        order: a.order,
    };
    write_imu_csv(&a.out, &cfg.apply(&seq)?)?;
    Ok(())
}

fn calibrate(a: Calibrate) -> Result<()> {
    let seq = read_imu_csv(&a.imu)?;
    let sfm = read_trajectory(&a.sfm)?;
    let opts = CalibrationOptions {
        endpoint_only: a.endpoint_only,
        max_gap: a.max_gap,
        ..CalibrationOptions::default()
    };
    let res = solve_calibration(&seq, &sfm, &opts)?;
    if !res.converged {
        eprintln!("warning: calibration did not converge");
    }
    write_json(&a.out, &CalibrationRecord::from(&res))
}

fn fuse(a: Fuse) -> Result<()> {
    let seq = read_imu_csv(&a.imu)?;
    let sfm = read_trajectory(&a.sfm)?;
    let calib = read_calib(&a.calib)?;
    let scaled = if sfm.scaled { sfm } else { apply_scale(&sfm, calib.lambda)? };
    let cfg = KalmanConfig::from_scales(a.q, a.r, a.p0);
    let opts = FusionOptions {
        max_gap: a.max_gap,
        ..FusionOptions::default()
    };
    let out = fuse_trajectories(&seq, &scaled, &calib, &cfg, &opts)?;
    if out.dropped > 0 {
        eprintln!("warning: {} SfM frames had no IMU sample within {} s", out.dropped, a.max_gap);
    }
    write_trajectory(&a.out, &out.trajectory)?;
    Ok(())
}

fn pluecker(a: Pluecker) -> Result<()> {
    let k = Intrinsics::new(a.fx, a.fy, a.cx, a.cy, a.width, a.height)?;
    let traj = read_trajectory(&a.poses)?;
    let traj = if a.absolute { traj } else { relative_trajectory(&traj) };
    let sampling = if a.corner { PixelSampling::Corner } else { PixelSampling::Center };
    write_plk(&a.out, &embed_trajectory(&traj, &k, sampling))?;
    Ok(())
}

#[derive(Serialize)]
struct FlowMetrics {
    clip_id: String,
    mean_flow: f64,
    five_point: FivePointStats,
}

#[derive(Serialize)]
struct Smoothness {
    trans_var: f64,
    rot_var: f64,
}

fn metrics(m: Metrics) -> Result<()> {
    match m {
        Metrics::Flow { input, out, clip_id } => {
            let maps = read_flow_dir(&input)?;
            let clip_id = clip_id
                .or_else(|| input.file_name().map(|n| n.to_string_lossy().into_owned()))
                .unwrap_or_default();
            let row = FlowMetrics {
                clip_id,
                mean_flow: motion_strength(&maps)?,
                five_point: five_point_stats(&maps)?,
            };
            let line = serde_json::to_string(&row)? + "\n";
            match out {
                Some(p) => write_text(&p, &line),
                None => {
                    print!("{line}");
                    Ok(())
                }
            }
        }
        Metrics::Smoothness { poses, out } => {
            let (trans_var, rot_var) = motion_smoothness(&read_trajectory(&poses)?)?;
            emit_json(out.as_deref(), &Smoothness { trans_var, rot_var })
        }
    }
}

#[derive(Serialize)]
struct DropRow<'a> {
    clip_id: &'a str,
    reasons: Vec<&'static str>,
}

fn report_skipped(skipped: &[egokin::Error]) {
    for e in skipped {
        eprintln!("skipped: {e}");
    }
}

fn clean(a: Clean) -> Result<()> {
    let mut cfg = match (&a.config, a.strategy) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<StrategyConfig>(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        (None, Some(n)) => StrategyConfig::preset(n)?,
        (None, None) => bail!("either --strategy or --config is required"),
    };
    if a.p16_only {
        if let Some(r) = cfg.rescue.as_mut() {
            r.p16_only = true;
        }
    }
    cfg.validate()?;
    let ingested = ingest_metadata(&a.input, a.lenient)?;
    report_skipped(&ingested.skipped);
    let mut kept = Vec::new();
    let mut report = String::new();
    for rec in &ingested.records {
        match apply_strategy(rec, &cfg) {
            Decision::Keep { .. } => kept.push(rec.clone()),
            Decision::Drop(reasons) => {
                let row = DropRow {
                    clip_id: &rec.clip_id,
                    reasons: reasons.iter().map(|r| r.as_str()).collect(),
                };
                report.push_str(&(serde_json::to_string(&row)? + "\n"));
            }
        }
    }
    write_metadata(&kept, &a.out)?;
    if let Some(p) = &a.report {
        write_text(p, &report)?;
    }
    eprintln!("kept {} of {}", kept.len(), ingested.records.len());
    Ok(())
}

fn stats(a: Stats) -> Result<()> {
    let ingested = ingest_metadata(&a.input, a.lenient)?;
    report_skipped(&ingested.skipped);
    let h = histogram_stats(&ingested.records, &a.field, a.bins)?;
    write_text(&a.out, &h.to_csv()?)
}

fn eval(e: Eval) -> Result<()> {
    let Eval::Poses { gen, gt, umeyama, out } = e;
    let mode = if umeyama { AlignMode::Umeyama } else { AlignMode::FirstFrame };
    let err = evaluate(&read_trajectory(&gen)?, &read_trajectory(&gt)?, mode)?;
    write_json(&out, &err)
}

fn simulate(a: Simulate) -> Result<()> {
    let text = std::fs::read_to_string(&a.profile).with_context(|| format!("reading {}", a.profile.display()))?;
    let mut profile: SimProfile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", a.profile.display()))?;
    if let Some(seed) = a.seed {
        profile.seed = seed;
    }
    let bundle = generate(&profile)?;
    bundle.write(&a.out)?;
    if let Some(path) = &a.oracle {
        write_json(path, &oracle_on_bundle(&bundle, profile.seed, &OracleConfig::default())?)?;
    }
    Ok(())
}

fn run_annotate(a: Annotate) -> Result<ExitCode> {
    let cfg = PipelineConfig::load(&a.config)?;
    let workers = match a.workers {
        Some(0) => bail!("--workers must be at least 1"),
        Some(n) => n,
        None => cfg.worker_count()?,
    };
    let entries = read_manifest(&cfg.manifest)?;
    let summary = annotate(&cfg, &entries, workers)?;
    for c in summary.clips.iter().filter(|c| !c.succeeded()) {
        eprintln!("{}: {} {}", c.clip_id, c.status, c.message.as_deref().unwrap_or(""));
    }
    eprintln!("{} of {} clips annotated", summary.succeeded(), summary.clips.len());
    Ok(if summary.succeeded() > 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::FilterImu(a) => filter_imu(a)?,
        Command::Calibrate(a) => calibrate(a)?,
        Command::Fuse(a) => fuse(a)?,
        Command::Pluecker(a) => pluecker(a)?,
        Command::Metrics(m) => metrics(m)?,
        Command::Clean(a) => clean(a)?,
        Command::Stats(a) => stats(a)?,
        Command::Eval(e) => eval(e)?,
        Command::Simulate(a) => simulate(a)?,
        Command::Annotate(a) => return run_annotate(a),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
