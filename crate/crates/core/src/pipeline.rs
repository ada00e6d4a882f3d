//! End-to-end annotation of a manifest of clips.
//!
//! Each clip runs filter → gate → calibrate → fuse → smoothness → Plücker
//! maps → metadata row on one worker. A failing clip is recorded and the rest
//! continue. Rows are written in manifest order, so output files do not
//! depend on the worker count.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{apply_scale, solve_calibration, CalibrationOptions, CalibrationRecord};
use crate::curation::{
    apply_strategy, five_point_stats, motion_smoothness, motion_strength, CleansingRecord,
    Decision, StrategyConfig,
};
use crate::error::{Error, Result};
use crate::io::{read_flow_map, read_imu_csv, read_trajectory, write_plk, write_trajectory};
use crate::kalman::{fuse_trajectories, FusionOptions, KalmanConfig};
use crate::pluecker::{embed_trajectory, relative_trajectory, Intrinsics, PixelSampling};
use crate::signal::{quality_gate, resample_uniform, uniform_rate, BandpassConfig, GateOutcome, QualityThresholds};
use crate::trajectory::ImuSequence;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "EGOKIN_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scores {
    pub clip_tf: f64,
    pub clip_ff: f64,
    pub egovideo: f64,
    pub dover: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub clip_id: String,
    pub imu_path: PathBuf,
    pub sfm_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Scores>,
}

/// Reads a JSONL manifest. Relative paths are resolved against the
/// manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = crate::io::read_string(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let de = &mut serde_json::Deserializer::from_str(line);
        let mut e: ManifestEntry = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: path.into(),
            line: i + 1,
            message: e.to_string(),
        })?;
        e.imu_path = base.join(&e.imu_path);
        e.sfm_path = base.join(&e.sfm_path);
        e.flow_dir = e.flow_dir.map(|d| base.join(d));
        out.push(e);
    }
    let mut ids: Vec<&str> = out.iter().map(|e| e.clip_id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::invalid(format!("duplicate clip_id `{}` in manifest", w[0])));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EkfScales {
    pub q: f64,
    pub r: f64,
    pub p0: f64,
}

impl Default for EkfScales {
    fn default() -> Self {
        Self {
            q: 0.01,
            r: 0.1,
            p0: 0.1,
        }
    }
}

/// A preset number or a full threshold set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrategySelection {
    Preset(u8),
    Custom(StrategyConfig),
}

impl Default for StrategySelection {
    fn default() -> Self {
        StrategySelection::Preset(3)
    }
}

impl StrategySelection {
    pub fn resolve(&self) -> Result<StrategyConfig> {
        let cfg = match self {
            StrategySelection::Preset(n) => StrategyConfig::preset(*n)?,
            StrategySelection::Custom(c) => *c,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_max_gap() -> f64 {
    0.010
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub manifest: PathBuf,
    pub out_dir: PathBuf,
    pub intrinsics: Intrinsics,
    #[serde(default)]
    pub sampling: PixelSampling,
    #[serde(default)]
    pub filter: BandpassConfig,
    #[serde(default)]
    pub quality: QualityThresholds,
    #[serde(default)]
    pub ekf: EkfScales,
    #[serde(default)]
    pub strategy: StrategySelection,
    /// Largest SfM-to-IMU timestamp gap, seconds.
    #[serde(default = "default_max_gap")]
    pub max_gap: f64,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl PipelineConfig {
    /// Parses a JSON config; relative paths resolve against `base`.
    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut cfg: PipelineConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Format {
            path: base.into(),
            message: e.to_string(),
        })?;
        cfg.manifest = base.join(&cfg.manifest);
        cfg.out_dir = base.join(&cfg.out_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_string(path)?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new("")))
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        self.filter.specs()?;
        self.kalman().validate()?;
        self.strategy.resolve()?;
        if !(self.max_gap > 0.0) {
            return Err(Error::invalid("max_gap must be positive"));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers must be at least 1"));
        }
        Ok(())
    }

    pub fn kalman(&self) -> KalmanConfig {
        KalmanConfig::from_scales(self.ekf.q, self.ekf.r, self.ekf.p0)
    }

    /// `EGOKIN_WORKERS`, else `workers`, else the number of logical cores.
    pub fn worker_count(&self) -> Result<usize> {
        match std::env::var(WORKERS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(Error::invalid(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
            },
            Err(_) => Ok(self
                .workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))),
        }
    }
}

/// One `status.jsonl` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipStatus {
    pub clip_id: String,
    /// `ok`, `rejected:<reasons>`, or `failed:<stage>`.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    /// Strategy decision when the clip has scores and flow maps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kept: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub drop_reasons: Vec<String>,
}

impl ClipStatus {
    pub fn succeeded(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone)]
pub struct ClipOutcome {
    pub status: ClipStatus,
    pub record: Option<CleansingRecord>,
}

#[derive(Debug, Clone, Default)]
pub struct AnnotateSummary {
    pub clips: Vec<ClipStatus>,
    pub records: usize,
}

impl AnnotateSummary {
    pub fn succeeded(&self) -> usize {
        self.clips.iter().filter(|c| c.succeeded()).count()
    }
}

fn stage<T>(name: &'static str, r: Result<T>) -> std::result::Result<T, (String, String)> {
    r.map_err(|e| (format!("failed:{name}"), e.to_string()))
}

fn uniform(seq: ImuSequence) -> Result<ImuSequence> {
    if uniform_rate(&seq).is_ok() {
        return Ok(seq);
    }
    let ts = seq.timestamps();
    let rate = (ts.len() - 1) as f64 / (ts[ts.len() - 1] - ts[0]);
    resample_uniform(&seq, rate)
}

/// Runs every stage for one clip, writing `fused.txt`, `calib.json` and
/// `clip.plk` under `out_dir/<clip_id>/`.
pub fn annotate_clip(entry: &ManifestEntry, cfg: &PipelineConfig) -> ClipOutcome {
    let mut status = ClipStatus {
        clip_id: entry.clip_id.clone(),
        status: "ok".into(),
        message: None,
        kept: None,
        drop_reasons: vec![],
    };
    match run_clip(entry, cfg, &mut status) {
        Ok(record) => ClipOutcome { status, record },
        Err((code, message)) => {
            status.status = code;
            status.message = Some(message);
            ClipOutcome {
                status,
                record: None,
            }
        }
    }
}

fn run_clip(
    entry: &ManifestEntry,
    cfg: &PipelineConfig,
    status: &mut ClipStatus,
) -> std::result::Result<Option<CleansingRecord>, (String, String)> {
    let raw = stage("read", read_imu_csv(&entry.imu_path))?;
    let sfm = stage("read", read_trajectory(&entry.sfm_path))?;
    match stage("gate", quality_gate(&sfm, &raw, &cfg.quality))? {
        GateOutcome::Pass => {}
        fail => return Err((fail.status(), "quality gate".into())),
    }
    let filtered = stage("filter", uniform(raw).and_then(|s| cfg.filter.apply(&s)))?;
    let copts = CalibrationOptions {
        max_gap: cfg.max_gap,
        ..CalibrationOptions::default()
    };
    let calib = stage("calibrate", solve_calibration(&filtered, &sfm, &copts))?;
    let scaled = stage("calibrate", apply_scale(&sfm, calib.lambda))?;
    let fopts = FusionOptions {
        max_gap: cfg.max_gap,
        ..FusionOptions::default()
    };
    let fused = stage(
        "fuse",
        fuse_trajectories(&filtered, &scaled, &calib, &cfg.kalman(), &fopts),
    )?;
    let (trans_var, rot_var) = stage("metrics", motion_smoothness(&fused.trajectory))?;

    let dir = cfg.out_dir.join(&entry.clip_id);
    stage("write", write_trajectory(&dir.join("fused.txt"), &fused.trajectory))?;
    let calib_json = stage(
        "write",
        serde_json::to_string_pretty(&CalibrationRecord::from(&calib)).map_err(Error::from),
    )?;
    stage("write", crate::io::write_bytes(&dir.join("calib.json"), format!("{calib_json}\n").as_bytes()))?;
    let maps = embed_trajectory(&relative_trajectory(&fused.trajectory), &cfg.intrinsics, cfg.sampling);
    stage("write", write_plk(&dir.join("clip.plk"), &maps))?;

    let (Some(flow_dir), Some(scores)) = (&entry.flow_dir, &entry.scores) else {
        return Ok(None);
    };
    let flows = stage("metrics", read_flow_dir(flow_dir))?;
    let record = CleansingRecord {
        clip_id: entry.clip_id.clone(),
        clip_tf: scores.clip_tf,
        clip_ff: scores.clip_ff,
        egovideo: scores.egovideo,
        dover: scores.dover,
        mean_flow: stage("metrics", motion_strength(&flows))?,
        five_point: stage("metrics", five_point_stats(&flows))?,
        trans_var,
        rot_var,
    };
    let strategy = stage("metrics", cfg.strategy.resolve())?;
    match apply_strategy(&record, &strategy) {
        Decision::Keep { .. } => status.kept = Some(true),
        Decision::Drop(reasons) => {
            status.kept = Some(false);
            status.drop_reasons = reasons.iter().map(|r| r.as_str().to_string()).collect();
        }
    }
    Ok(Some(record))
}

/// Every `*.flw` file in `dir`, in file-name order.
pub fn read_flow_dir(dir: &Path) -> Result<Vec<crate::curation::FlowMap>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "flw"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Empty("flow directory"));
    }
    paths.iter().map(|p| read_flow_map(p)).collect()
}

/// Annotates every manifest entry on `workers` threads and writes
/// `status.jsonl` and `metadata.jsonl` into the output directory.
pub fn annotate(cfg: &PipelineConfig, entries: &[ManifestEntry], workers: usize) -> Result<AnnotateSummary> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(e.to_string()))?;
    let outcomes: Vec<ClipOutcome> = pool.install(|| {
        entries
            .par_iter()
            .map(|e| annotate_clip(e, cfg))
            .collect()
    });

    let mut status_text = String::new();
    let mut records = Vec::new();
    for o in &outcomes {
        status_text.push_str(&serde_json::to_string(&o.status)?);
        status_text.push('\n');
        records.extend(o.record.clone());
    }
    crate::io::write_bytes(&cfg.out_dir.join("status.jsonl"), status_text.as_bytes())?;
    crate::curation::write_metadata(&records, &cfg.out_dir.join("metadata.jsonl"))?;
    Ok(AnnotateSummary {
        records: records.len(),
        clips: outcomes.into_iter().map(|o| o.status).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_keys() {
        let good = r#"{"manifest":"m.jsonl","out_dir":"out",
            "intrinsics":{"fx":10,"fy":10,"cx":4,"cy":4,"width":8,"height":8}}"#;
        let cfg = PipelineConfig::from_json(good, Path::new("/base")).unwrap();
        assert_eq!(cfg.manifest, Path::new("/base/m.jsonl"));
        assert_eq!(cfg.strategy, StrategySelection::Preset(3));
        assert_eq!(cfg.ekf, EkfScales::default());
        let bad = good.replace("\"out_dir\"", "\"bogus\":1,\"out_dir\"");
        let err = PipelineConfig::from_json(&bad, Path::new("")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let preset = good.replace("\"out_dir\"", "\"strategy\":7,\"out_dir\"");
        assert!(PipelineConfig::from_json(&preset, Path::new("")).is_err());
        let custom = good.replace(
            "\"out_dir\"",
            r#""strategy":{"min_clip_tf":0.1,"min_clip_ff":0.1,"min_dover":0.1},"out_dir""#,
        );
        let cfg = PipelineConfig::from_json(&custom, Path::new("")).unwrap();
        assert!(matches!(cfg.strategy, StrategySelection::Custom(_)));
    }

    #[test]
    fn manifest_paths_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        std::fs::write(&p, "{\"clip_id\":\"a\",\"imu_path\":\"a.csv\",\"sfm_path\":\"a.txt\"}\n\n").unwrap();
        let m = read_manifest(&p).unwrap();
        assert_eq!(m[0].imu_path, dir.path().join("a.csv"));
        std::fs::write(
            &p,
            "{\"clip_id\":\"a\",\"imu_path\":\"a\",\"sfm_path\":\"a\"}\n{\"clip_id\":\"a\",\"imu_path\":\"b\",\"sfm_path\":\"b\"}\n",
        )
        .unwrap();
        assert!(read_manifest(&p).is_err());
        std::fs::write(&p, "{\"clip_id\":\"a\",\"imu_path\":3}\n").unwrap();
        let err = read_manifest(&p).unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }
}
