//! Atomic file writes and the binary grid dump.
//!
//! Grid dump layout, all little-endian:
//!
//! | offset | type      | content                                   |
//! |--------|-----------|-------------------------------------------|
//! | 0      | `[u8; 8]` | magic `SWGRID\0\0`                        |
//! | 8      | `u32`     | format version (1)                        |
//! | 12     | `u32`     | rank: 2 for `ρ(x1, x2)`, 4 for `f(x1, x2, v1, v2)` |
//! | 16     | `u32`     | cells per direction `n`                   |
//! | 20     | `u32`     | number of frames                          |
//! | 24     | `f64`     | spatial half width `lx`                   |
//! | 32     | `f64`     | velocity half width `lv`                  |
//! | 40     | frames    | per frame: `f64` time, then `n^rank` `f64` values |
//!
//! Values are row-major with the last index fastest. Cell `i` along a
//! spatial axis is centered at `-lx + (i + 1/2) 2 lx / n`, likewise in
//! velocity.

use crate::error::HarnessError;
use std::fs;
use std::io::Write;
use std::path::Path;

pub const GRID_MAGIC: [u8; 8] = *b"SWGRID\0\0";
pub const GRID_VERSION: u32 = 1;
const HEADER_LEN: usize = 40;

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| HarnessError::format(path, "not a file path"))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        HarnessError::io(path, e)
    })
}

pub fn create_dir(path: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(path).map_err(|e| HarnessError::io(path, e))
}

pub fn read(path: &Path) -> Result<Vec<u8>, HarnessError> {
    fs::read(path).map_err(|e| HarnessError::io(path, e))
}

/// Serializes `rows` under `header` with the csv crate.
pub fn csv_bytes<R: serde::Serialize>(header: &[&str], rows: &[R]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub fn read_csv<R: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<R>, HarnessError> {
    let bytes = read(path)?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes.as_slice());
    r.deserialize().collect::<Result<Vec<R>, _>>().map_err(|e| HarnessError::format(path, e))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSeries {
    pub rank: u32,
    pub n: usize,
    pub lx: f64,
    pub lv: f64,
    pub times: Vec<f64>,
    /// One entry per frame, `n^rank` values each.
    pub frames: Vec<Vec<f64>>,
}

impl GridSeries {
    pub fn new(rank: u32, n: usize, lx: f64, lv: f64) -> Self {
        Self { rank, n, lx, lv, times: Vec::new(), frames: Vec::new() }
    }

    pub fn frame_len(&self) -> usize {
        self.n.pow(self.rank)
    }

    pub fn push(&mut self, time: f64, values: Vec<f64>) {
        assert_eq!(values.len(), self.frame_len());
        self.times.push(time);
        self.frames.push(values);
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.lx / self.n as f64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(HEADER_LEN + self.frames.len() * (1 + self.frame_len()) * 8);
        b.extend_from_slice(&GRID_MAGIC);
        b.extend_from_slice(&GRID_VERSION.to_le_bytes());
        b.extend_from_slice(&self.rank.to_le_bytes());
        b.extend_from_slice(&(self.n as u32).to_le_bytes());
        b.extend_from_slice(&(self.frames.len() as u32).to_le_bytes());
        b.extend_from_slice(&self.lx.to_le_bytes());
        b.extend_from_slice(&self.lv.to_le_bytes());
        for (t, f) in self.times.iter().zip(&self.frames) {
            b.extend_from_slice(&t.to_le_bytes());
            for v in f {
                b.extend_from_slice(&v.to_le_bytes());
            }
        }
        b
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, String> {
        if b.len() < HEADER_LEN || b[..8] != GRID_MAGIC {
            return Err("not a grid dump (bad magic)".to_string());
        }
        let u32_at = |o: usize| u32::from_le_bytes(b[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(b[o..o + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != GRID_VERSION {
            return Err(format!("unsupported grid dump version {version}"));
        }
        let rank = u32_at(12);
        if rank != 2 && rank != 4 {
            return Err(format!("unsupported rank {rank}"));
        }
        let n = u32_at(16) as usize;
        let frames = u32_at(20) as usize;
        let mut s = GridSeries::new(rank, n, f64_at(24), f64_at(32));
        let per = 1 + s.frame_len();
        if b.len() != HEADER_LEN + frames * per * 8 {
            return Err(format!("size {} does not match {frames} frames of n = {n}", b.len()));
        }
        for k in 0..frames {
            let base = HEADER_LEN + k * per * 8;
            s.times.push(f64_at(base));
            s.frames.push((1..per).map(|i| f64_at(base + 8 * i)).collect());
        }
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_bytes(&read(path)?).map_err(|m| HarnessError::format(path, m))
    }
}

/// Peak resident set size of this process in KiB, from `/proc`.
pub fn peak_rss_kib() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

/// Resets the peak RSS counter where the kernel allows it.
pub fn reset_peak_rss() {
    let _ = fs::write("/proc/self/clear_refs", "5");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_dump_layout() {
        let mut s = GridSeries::new(2, 2, 100.0, 5.0);
        s.push(0.5, vec![1.0, 2.0, 3.0, 4.0]);
        let b = s.to_bytes();
        assert_eq!(b.len(), 40 + 5 * 8);
        assert_eq!(&b[..8], b"SWGRID\0\0");
        assert_eq!(b[8..12], 1u32.to_le_bytes());
        assert_eq!(b[12..16], 2u32.to_le_bytes());
        assert_eq!(b[16..20], 2u32.to_le_bytes());
        assert_eq!(b[20..24], 1u32.to_le_bytes());
        assert_eq!(b[24..32], 100.0f64.to_le_bytes());
        assert_eq!(b[32..40], 5.0f64.to_le_bytes());
        assert_eq!(b[40..48], 0.5f64.to_le_bytes());
        assert_eq!(b[56..64], 2.0f64.to_le_bytes());
        assert_eq!(GridSeries::from_bytes(&b).unwrap(), s);
    }

    #[test]
    fn corrupt_dumps_are_rejected() {
        let mut s = GridSeries::new(4, 2, 1.0, 1.0);
        s.push(0.0, vec![0.0; 16]);
        let mut b = s.to_bytes();
        assert!(GridSeries::from_bytes(&b[..b.len() - 1]).is_err());
        b[0] = b'X';
        assert!(GridSeries::from_bytes(&b).is_err());
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
