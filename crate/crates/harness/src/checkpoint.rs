//! Restart files written at slice boundaries.
//!
//! Layout, little-endian: magic `SWCKPT\0\0`, `u32` format version, `u64`
//! header length `h`, `h` bytes of JSON header, then the `f64` payload: the
//! level state values followed by every recorded density frame.

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::io::{read, write_atomic};
use crate::records::{AgentRow, ControlRow, CostRow, MomentRow};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"SWCKPT\0\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rows {
    pub costs: Vec<CostRow>,
    pub controls: Vec<ControlRow>,
    pub moments: Vec<MomentRow>,
    pub agents: Vec<AgentRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameIndex {
    pub rank: u32,
    pub n: usize,
    pub times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub config: ExperimentConfig,
    /// First slice still to run.
    pub next_slice: usize,
    pub warm: Vec<[f64; 2]>,
    pub desired_variance: f64,
    pub outside_max: usize,
    pub rows: Rows,
    pub state_len: usize,
    /// Frame sets in payload order.
    pub frames: Vec<FrameIndex>,
}

pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub state: Vec<f64>,
    /// Values of each frame set of the header, frame after frame.
    pub frames: Vec<Vec<Vec<f64>>>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let head = serde_json::to_vec(&self.header).expect("header serializes");
        let mut b = Vec::new();
        b.extend_from_slice(&CHECKPOINT_MAGIC);
        b.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        b.extend_from_slice(&(head.len() as u64).to_le_bytes());
        b.extend_from_slice(&head);
        for v in self.state.iter().chain(self.frames.iter().flatten().flatten()) {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, String> {
        if b.len() < 20 || b[..8] != CHECKPOINT_MAGIC {
            return Err("not a checkpoint (bad magic)".to_string());
        }
        let version = u32::from_le_bytes(b[8..12].try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(format!("unsupported checkpoint version {version}"));
        }
        let h = u64::from_le_bytes(b[12..20].try_into().unwrap()) as usize;
        let body = b.get(20..20 + h).ok_or("truncated header")?;
        let header: CheckpointHeader = serde_json::from_slice(body).map_err(|e| e.to_string())?;
        let payload = &b[20 + h..];
        let frame_values: usize = header.frames.iter().map(|f| f.times.len() * f.n.pow(f.rank)).sum();
        if payload.len() != 8 * (header.state_len + frame_values) {
            return Err("payload size does not match the header".to_string());
        }
        let mut values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let state: Vec<f64> = values.by_ref().take(header.state_len).collect();
        let frames = header
            .frames
            .iter()
            .map(|ix| {
                let len = ix.n.pow(ix.rank);
                (0..ix.times.len()).map(|_| values.by_ref().take(len).collect()).collect()
            })
            .collect();
        Ok(Self { header, state, frames })
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_bytes(&read(path)?).map_err(|m| HarnessError::format(path, m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{LevelKind, Preset};

    #[test]
    fn round_trip() {
        let ck = Checkpoint {
            header: CheckpointHeader {
                format_version: CHECKPOINT_VERSION,
                config: ExperimentConfig::from_preset(Preset::S1, LevelKind::Micro, 4),
                next_slice: 7,
                warm: vec![[0.1, -0.2]],
                desired_variance: 12.5,
                outside_max: 0,
                rows: Rows::default(),
                state_len: 3,
                frames: vec![FrameIndex { rank: 2, n: 2, times: vec![0.0, 0.02] }],
            },
            state: vec![1.0, 2.0, f64::MIN_POSITIVE],
            frames: vec![vec![vec![1.0, 2.0, 3.0, 4.0], vec![5.0, 6.0, 7.0, 8.0]]],
        };
        let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
        assert_eq!(back.header, ck.header);
        assert_eq!(back.state, ck.state);
        assert_eq!(back.frames, ck.frames);
        let b = ck.to_bytes();
        assert!(Checkpoint::from_bytes(&b[..b.len() - 8]).is_err());
    }
}
