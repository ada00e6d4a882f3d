//! Little-endian binary containers for Plücker maps (`PLK1`) and optical-flow
//! magnitude maps (`FLW1`).

use std::path::Path;

use crate::curation::FlowMap;
use crate::error::{Error, Result};
use crate::pluecker::PlueckerMap;

pub const PLK_MAGIC: &[u8; 4] = b"PLK1";
pub const FLW_MAGIC: &[u8; 4] = b"FLW1";

/// Writes frames as `PLK1`: magic, u32 width, u32 height, u32 frame count,
/// then frame-major, row-major, channel-interleaved f32.
pub fn write_plk(path: &Path, frames: &[PlueckerMap]) -> Result<()> {
    let (w, h) = frames.first().map_or((0, 0), |m| (m.width, m.height));
    if frames.iter().any(|m| m.width != w || m.height != h) {
        return Err(Error::invalid("all Plücker frames must share dimensions"));
    }
    let mut buf = Vec::with_capacity(16 + frames.len() * w as usize * h as usize * 24);
    buf.extend_from_slice(PLK_MAGIC);
    for v in [w, h, frames.len() as u32] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for frame in frames {
        for &v in frame.data() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    super::write_bytes(path, &buf)
}

/// Reads a `PLK1` file into `(width, height, frames)`; samples stay f32.
pub fn read_plk(path: &Path) -> Result<(u32, u32, Vec<Vec<f32>>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cur = Cursor::new(path, &bytes);
    cur.magic(PLK_MAGIC)?;
    let (w, h, n) = (cur.u32()?, cur.u32()?, cur.u32()?);
    let per_frame = w as usize * h as usize * 6;
    let frames = (0..n)
        .map(|_| cur.f32s(per_frame))
        .collect::<Result<Vec<_>>>()?;
    cur.finish()?;
    Ok((w, h, frames))
}

pub fn write_flow_map(path: &Path, map: &FlowMap) -> Result<()> {
    let mut buf = Vec::with_capacity(12 + map.magnitudes.len() * 4);
    buf.extend_from_slice(FLW_MAGIC);
    buf.extend_from_slice(&map.width.to_le_bytes());
    buf.extend_from_slice(&map.height.to_le_bytes());
    for &v in &map.magnitudes {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    super::write_bytes(path, &buf)
}

pub fn read_flow_map(path: &Path) -> Result<FlowMap> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cur = Cursor::new(path, &bytes);
    cur.magic(FLW_MAGIC)?;
    let (w, h) = (cur.u32()?, cur.u32()?);
    let mags = cur.f32s(w as usize * h as usize)?;
    cur.finish()?;
    FlowMap::new(w, h, mags).map_err(|e| Error::Format {
        path: path.into(),
        message: e.to_string(),
    })
}

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(path: &'a Path, bytes: &'a [u8]) -> Self {
        Self {
            path,
            bytes,
            pos: 0,
        }
    }

    fn fail(&self, message: impl Into<String>) -> Error {
        Error::Format {
            path: self.path.into(),
            message: message.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| self.fail("truncated file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        if self.take(4)? != magic {
            return Err(self.fail(format!(
                "bad magic, expected {}",
                String::from_utf8_lossy(magic)
            )));
        }
        Ok(())
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| self.fail("size overflow"))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.fail("trailing bytes"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Pose, UnitQuaternion, Vec3};
    use crate::pluecker::{pluecker_embed, Intrinsics, PixelSampling};

    #[test]
    fn plk_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.plk");
        let k = Intrinsics::new(2.0, 2.0, 1.0, 1.0, 3, 2).unwrap();
        let pose = Pose::new(
            UnitQuaternion::from_euler_angles(0.1, 0.2, 0.3),
            Vec3::new(0.5, -1.0, 2.0),
        );
        let frames = vec![
            pluecker_embed(&Pose::identity(), &k, PixelSampling::Center),
            pluecker_embed(&pose, &k, PixelSampling::Center),
        ];
        write_plk(&path, &frames).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"PLK1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), 16 + 2 * 3 * 2 * 6 * 4);
        let (w, h, back) = read_plk(&path).unwrap();
        assert_eq!((w, h, back.len()), (3, 2, 2));
        for (f, m) in back.iter().zip(&frames) {
            for (a, b) in f.iter().zip(m.data()) {
                assert_eq!(*a, *b as f32);
            }
        }
    }

    #[test]
    fn flw_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.flw");
        let map = FlowMap::new(2, 2, vec![0.0, 4.0, 12.5, 30.0]).unwrap();
        write_flow_map(&path, &map).unwrap();
        assert_eq!(read_flow_map(&path).unwrap(), map);

        let mut bytes = std::fs::read(&path).unwrap();
        bytes.pop();
        std::fs::write(&path, &bytes).unwrap();
        assert!(read_flow_map(&path).unwrap_err().to_string().contains("truncated"));
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(read_flow_map(&path).unwrap_err().to_string().contains("magic"));
    }
}
