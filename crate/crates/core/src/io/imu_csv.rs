use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_g9;
use crate::geometry::Vec3;
use crate::trajectory::{ImuSample, ImuSequence};

pub const IMU_CSV_HEADER: [&str; 7] = ["t", "ax", "ay", "az", "gx", "gy", "gz"];

#[derive(Debug, Deserialize, Serialize)]
struct Row {
    t: f64,
    ax: f64,
    ay: f64,
    az: f64,
    gx: f64,
    gy: f64,
    gz: f64,
}

pub fn read_imu_csv(path: &Path) -> Result<ImuSequence> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?;
    if headers.iter().map(str::trim).ne(IMU_CSV_HEADER) {
        return Err(Error::Format {
            path: path.into(),
            message: format!("expected header `{}`", IMU_CSV_HEADER.join(",")),
        });
    }
    let mut samples = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let r = row.map_err(|e| csv_error(path, e))?;
        samples.push(ImuSample::new(
            r.t,
            Vec3::new(r.ax, r.ay, r.az),
            Vec3::new(r.gx, r.gy, r.gz),
        ));
    }
    ImuSequence::new(samples).map_err(|e| Error::Format {
        path: path.into(),
        message: e.to_string(),
    })
}

pub fn write_imu_csv(path: &Path, seq: &ImuSequence) -> Result<()> {
    let mut out = IMU_CSV_HEADER.join(",");
    out.push('\n');
    for s in seq.samples() {
        let vals = [
            s.t,
            s.linear_accel.x,
            s.linear_accel.y,
            s.linear_accel.z,
            s.angular_vel.x,
            s.angular_vel.y,
            s.angular_vel.z,
        ];
        let line: Vec<String> = vals.iter().map(|&v| fmt_g9(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    super::write_bytes(path, out.as_bytes())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        path: path.into(),
        line,
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_header_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("imu.csv");
        let seq = ImuSequence::new(
            (0..5)
                .map(|k| {
                    let t = k as f64 * 0.005;
                    ImuSample::new(t, Vec3::new(t, -9.81, 0.125), Vec3::new(0.0, 1e-3, -2.0))
                })
                .collect(),
        )
        .unwrap();
        write_imu_csv(&path, &seq).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,ax,ay,az,gx,gy,gz\n"));
        assert_eq!(read_imu_csv(&path).unwrap(), seq);

        std::fs::write(&path, "time,ax,ay,az,gx,gy,gz\n0,0,0,0,0,0,0\n").unwrap();
        assert!(read_imu_csv(&path).is_err());
        std::fs::write(&path, "t,ax,ay,az,gx,gy,gz\n0,0,0,zz,0,0,0\n").unwrap();
        let e = read_imu_csv(&path).unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
    }
}
