//! On-disk formats: pose trajectories, IMU CSV, Plücker maps, and flow maps.

mod binary;
mod imu_csv;
mod traj_text;

pub use binary::{read_flow_map, read_plk, write_flow_map, write_plk, FLW_MAGIC, PLK_MAGIC};
pub use imu_csv::{read_imu_csv, write_imu_csv, IMU_CSV_HEADER};
pub use traj_text::{parse_trajectory, read_trajectory, render_trajectory, write_trajectory};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
