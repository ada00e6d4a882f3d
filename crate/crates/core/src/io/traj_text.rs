//! Pose trajectory text format.
//!
//! ```text
//! # scaled=<0|1> points=<N_p|->
//! t tx ty tz qw qx qy qz
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::format::fmt_g9;
use crate::geometry::{canonical, quat_normalize, quat_to_wxyz, Pose, Vec3};
use crate::trajectory::PoseTrajectory;

pub fn render_trajectory(traj: &PoseTrajectory) -> String {
    let mut out = String::new();
    let points = traj
        .point_count
        .map_or_else(|| "-".to_string(), |n| n.to_string());
    writeln!(out, "# scaled={} points={}", u8::from(traj.scaled), points).unwrap();
    for (t, pose) in traj.iter() {
        let q = quat_to_wxyz(&canonical(&pose.rotation));
        let tr = pose.translation;
        let fields = [t, tr.x, tr.y, tr.z, q[0], q[1], q[2], q[3]];
        let line: Vec<String> = fields.iter().map(|&v| fmt_g9(v)).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
    }
    out
}

pub fn write_trajectory(path: &Path, traj: &PoseTrajectory) -> Result<()> {
    super::write_bytes(path, render_trajectory(traj).as_bytes())
}

pub fn read_trajectory(path: &Path) -> Result<PoseTrajectory> {
    parse_trajectory(&super::read_string(path)?, path)
}

pub fn parse_trajectory(text: &str, path: &Path) -> Result<PoseTrajectory> {
    let err = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(path),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "missing header".into()))?;
    let (scaled, points) = parse_header(header).map_err(|m| err(1, m))?;

    let mut timestamps = Vec::new();
    let mut poses = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|f| f.parse::<f64>().map_err(|e| err(i + 1, format!("`{f}`: {e}"))))
            .collect::<Result<_>>()?;
        if vals.len() != 8 {
            return Err(err(i + 1, format!("expected 8 fields, got {}", vals.len())));
        }
        let q = quat_normalize([vals[4], vals[5], vals[6], vals[7]])
            .map_err(|e| err(i + 1, e.to_string()))?;
        timestamps.push(vals[0]);
        poses.push(Pose::new(q, Vec3::new(vals[1], vals[2], vals[3])));
    }
    let traj = PoseTrajectory::new(timestamps, poses, scaled).map_err(|e| Error::Format {
        path: PathBuf::from(path),
        message: e.to_string(),
    })?;
    Ok(traj.with_point_count(points))
}

fn parse_header(header: &str) -> std::result::Result<(bool, Option<u64>), String> {
    let body = header
        .trim()
        .strip_prefix('#')
        .ok_or("header must start with `#`")?;
    let mut scaled = None;
    let mut points = None;
    for tok in body.split_whitespace() {
        match tok.split_once('=') {
            Some(("scaled", "0")) => scaled = Some(false),
            Some(("scaled", "1")) => scaled = Some(true),
            Some(("points", "-")) => points = Some(None),
            Some(("points", n)) => {
                points = Some(Some(
                    n.parse::<u64>().map_err(|e| format!("points: {e}"))?,
                ))
            }
            _ => return Err(format!("unexpected header token `{tok}`")),
        }
    }
    Ok((
        scaled.ok_or("header lacks scaled=")?,
        points.ok_or("header lacks points=")?,
    ))
}
