use std::path::Path;

use serde::{Deserialize, Serialize};

use super::FivePointStats;
use crate::error::{Error, Result};
use crate::format::fmt_g9;

/// One clip's cleaning metadata. Scores come from external models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CleansingRecord {
    pub clip_id: String,
    pub clip_tf: f64,
    pub clip_ff: f64,
    pub egovideo: f64,
    pub dover: f64,
    pub mean_flow: f64,
    pub five_point: FivePointStats,
    pub trans_var: f64,
    pub rot_var: f64,
}

impl CleansingRecord {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("clip_tf", self.clip_tf), ("clip_ff", self.clip_ff), ("egovideo", self.egovideo)] {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} = {v} outside [-1, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.dover) {
            return Err(Error::invalid(format!("dover = {} outside [0, 1]", self.dover)));
        }
        for (name, v) in [("mean_flow", self.mean_flow), ("trans_var", self.trans_var), ("rot_var", self.rot_var)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} = {v} must be finite and non-negative")));
            }
        }
        if self.five_point.as_array().iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid("five_point proportions must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Numeric value of a histogram field.
    pub fn field(&self, name: &str) -> Result<f64> {
        let fp = &self.five_point;
        Ok(match name {
            "clip_tf" => self.clip_tf,
            "clip_ff" => self.clip_ff,
            "egovideo" => self.egovideo,
            "dover" => self.dover,
            "mean_flow" => self.mean_flow,
            "trans_var" => self.trans_var,
            "rot_var" => self.rot_var,
            "p0_4" => fp.p0_4,
            "p4_8" => fp.p4_8,
            "p8_12" => fp.p8_12,
            "p12_16" => fp.p12_16,
            "p16_plus" => fp.p16_plus,
            _ => return Err(Error::UnknownField(name.to_string())),
        })
    }
}

pub const HISTOGRAM_FIELDS: [&str; 12] = [
    "clip_tf", "clip_ff", "egovideo", "dover", "mean_flow", "trans_var", "rot_var", "p0_4",
    "p4_8", "p8_12", "p12_16", "p16_plus",
];

/// Records parsed from a metadata stream plus the lines skipped in lenient
/// mode.
#[derive(Debug, Default)]
pub struct Ingested {
    pub records: Vec<CleansingRecord>,
    pub skipped: Vec<Error>,
}

fn parse_line(line: &str, path: &Path, lineno: usize) -> Result<CleansingRecord> {
    let err = |message: String| Error::Parse {
        path: path.into(),
        line: lineno,
        message,
    };
    let de = &mut serde_json::Deserializer::from_str(line);
    let rec: CleansingRecord = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        if field == "." {
            err(e.inner().to_string())
        } else {
            err(format!("field `{field}`: {}", e.inner()))
        }
    })?;
    rec.validate().map_err(|e| err(e.to_string()))?;
    Ok(rec)
}

/// Parses JSONL metadata. Blank lines are ignored. With `lenient`, malformed
/// lines are collected in [`Ingested::skipped`]; otherwise the first one is
/// returned as the error.
pub fn parse_metadata(text: &str, path: &Path, lenient: bool) -> Result<Ingested> {
    let mut out = Ingested::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line, path, i + 1) {
            Ok(r) => out.records.push(r),
            Err(e) if lenient => out.skipped.push(e),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

pub fn ingest_metadata(path: &Path, lenient: bool) -> Result<Ingested> {
    parse_metadata(&crate::io::read_string(path)?, path, lenient)
}

pub fn render_metadata(records: &[CleansingRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_metadata(records: &[CleansingRecord], path: &Path) -> Result<()> {
    crate::io::write_bytes(path, render_metadata(records)?.as_bytes())
}

/// Equal-width histogram of one record field over `[min, max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub field: String,
    pub min: f64,
    pub max: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let w = (self.max - self.min) / self.counts.len() as f64;
        let hi = if i + 1 == self.counts.len() {
            self.max
        } else {
            self.min + w * (i + 1) as f64
        };
        (self.min + w * i as f64, hi)
    }

    /// `bin_lo,bin_hi,count` rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::invalid(e.to_string());
        w.write_record(["bin_lo", "bin_hi", "count"]).map_err(io)?;
        for (i, c) in self.counts.iter().enumerate() {
            let (lo, hi) = self.bin_edges(i);
            w.write_record([fmt_g9(lo), fmt_g9(hi), c.to_string()]).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn histogram_stats(records: &[CleansingRecord], field: &str, bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::invalid("bin count must be at least 1"));
    }
    let values = records
        .iter()
        .map(|r| r.field(field))
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        // Validate the name even without data.
        CleansingRecord::field(&dummy(), field)?;
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (min, max) = if values.is_empty() { (0.0, 0.0) } else { (min, max) };
    let mut counts = vec![0u64; bins];
    for v in values {
        let i = if max > min {
            (((v - min) / (max - min)) * bins as f64) as usize
        } else {
            0
        };
        counts[i.min(bins - 1)] += 1;
    }
    Ok(Histogram {
        field: field.to_string(),
        min,
        max,
        counts,
    })
}

fn dummy() -> CleansingRecord {
    CleansingRecord {
        clip_id: String::new(),
        clip_tf: 0.0,
        clip_ff: 0.0,
        egovideo: 0.0,
        dover: 0.0,
        mean_flow: 0.0,
        five_point: FivePointStats::default(),
        trans_var: 0.0,
        rot_var: 0.0,
    }
}
