//! `UMCLCKPT` checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        8 bytes "UMCLCKPT"
//! version      u16 = 1
//! step         u64
//! total_steps  u64
//! adam_t       u64
//! config       u32 length + UTF-8 canonical key-sorted `key=value` text
//! metrics      u32 length + UTF-8 text
//! blocks       u32 count, then per block:
//!                u16 name length + name, u16 rank, rank × u64 dims,
//!                product(dims) × f64
//! ```
//!
//! Blocks hold every model tensor under its name, then the optimizer moments
//! as `adam.m.<name>` and `adam.v.<name>`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::{TrainConfig, TrainState};

pub const CKPT_MAGIC: &[u8; 8] = b"UMCLCKPT";
pub const CKPT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointRecord {
    pub version: u16,
    pub step: u64,
    pub total_steps: u64,
    pub adam_t: u64,
    pub config: String,
    pub metrics: String,
    pub blocks: Vec<(String, Tensor)>,
}

impl CheckpointRecord {
    pub fn from_state(state: &TrainState, metrics: &str) -> Self {
        let mut blocks: Vec<(String, Tensor)> = state
            .model
            .tensors()
            .into_iter()
            .map(|(n, t)| (n, t.clone()))
            .collect();
        let names: Vec<String> = blocks.iter().map(|(n, _)| n.clone()).collect();
        for (prefix, moments) in [("adam.m", &state.opt.m), ("adam.v", &state.opt.v)] {
            for (n, t) in names.iter().zip(moments) {
                blocks.push((format!("{prefix}.{n}"), t.clone()));
            }
        }
        Self {
            version: CKPT_VERSION,
            step: state.step,
            total_steps: state.total_steps,
            adam_t: state.opt.t,
            config: state.config.to_text(),
            metrics: metrics.to_string(),
            blocks,
        }
    }

    /// Rebuilds the training state; every expected block must be present
    /// with the expected shape and no extra blocks are allowed.
    pub fn to_state(&self) -> Result<TrainState> {
        let config = TrainConfig::from_text(&self.config)?;
        let mut state = TrainState::new(&config)?;
        let mut lookup: std::collections::HashMap<&str, &Tensor> =
            self.blocks.iter().map(|(n, t)| (n.as_str(), t)).collect();
        if lookup.len() != self.blocks.len() {
            return Err(Error::Format("duplicate checkpoint block names".into()));
        }
        let mut take = |name: &str, into: &mut Tensor| -> Result<()> {
            let t = lookup
                .remove(name)
                .ok_or_else(|| Error::Format(format!("checkpoint lacks block {name:?}")))?;
            if t.shape != into.shape {
                return Err(Error::Format(format!(
                    "block {name:?} has shape {:?}, expected {:?}",
                    t.shape, into.shape
                )));
            }
            into.data.copy_from_slice(&t.data);
            Ok(())
        };
        let TrainState { model, opt, .. } = &mut state;
        let names: Vec<String> = model.tensors().into_iter().map(|(n, _)| n).collect();
        for (n, t) in model.tensors_mut() {
            take(&n, t)?;
        }
        for (i, n) in names.iter().enumerate() {
            take(&format!("adam.m.{n}"), &mut opt.m[i])?;
            take(&format!("adam.v.{n}"), &mut opt.v[i])?;
        }
        if let Some(extra) = lookup.keys().next() {
            return Err(Error::Format(format!("unexpected checkpoint block {extra:?}")));
        }
        state.opt.t = self.adam_t;
        state.step = self.step;
        state.total_steps = self.total_steps;
        Ok(state)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CKPT_MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        for v in [self.step, self.total_steps, self.adam_t] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for text in [&self.config, &self.metrics] {
            out.extend_from_slice(&(text.len() as u32).to_le_bytes());
            out.extend_from_slice(text.as_bytes());
        }
        out.extend_from_slice(&(self.blocks.len() as u32).to_le_bytes());
        for (name, t) in &self.blocks {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.shape.len() as u16).to_le_bytes());
            for &d in &t.shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut c = Cursor { bytes, pos: 0 };
        if c.take(8)? != CKPT_MAGIC {
            return Err(Error::Format("bad checkpoint magic".into()));
        }
        let version = c.u16()?;
        if version != CKPT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let step = c.u64()?;
        let total_steps = c.u64()?;
        let adam_t = c.u64()?;
        let config = c.text()?;
        let metrics = c.text()?;
        let n = c.u32()? as usize;
        let mut blocks = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            let len = c.u16()? as usize;
            let name = String::from_utf8(c.take(len)?.to_vec())
                .map_err(|_| Error::Format("block name is not UTF-8".into()))?;
            let rank = c.u16()? as usize;
            let shape: Vec<usize> = (0..rank).map(|_| c.u64().map(|d| d as usize)).collect::<Result<_>>()?;
            let count = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .filter(|&n| n <= bytes.len() / 8)
                .ok_or_else(|| Error::Format(format!("block {name:?} is larger than the file")))?;
            let data = c
                .take(count * 8)?
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                .collect();
            blocks.push((name, Tensor { shape, data }));
        }
        if c.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after last block".into()));
        }
        Ok(Self {
            version,
            step,
            total_steps,
            adam_t,
            config,
            metrics,
            blocks,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("truncated checkpoint".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn text(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Format("text section is not UTF-8".into()))
    }
}

pub fn save_checkpoint(path: &Path, state: &TrainState, metrics: &str) -> Result<()> {
    fs::write(path, CheckpointRecord::from_state(state, metrics).to_bytes())?;
    Ok(())
}

/// Training state plus the metrics text stored alongside it.
pub fn load_checkpoint(path: &Path) -> Result<(TrainState, String)> {
    let rec = CheckpointRecord::from_bytes(&fs::read(path)?)?;
    Ok((rec.to_state()?, rec.metrics))
}
