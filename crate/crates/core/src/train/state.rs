//! Binary optimizer state for deterministic resume.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grad::AdamState;

const MAGIC: &[u8; 8] = b"SEGATTST";
const VERSION: u32 = 1;

/// Everything besides the model parameters that a resumed run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerState {
    /// Completed epochs.
    pub epoch: usize,
    /// Completed optimizer steps.
    pub step: usize,
    pub best_dev_loss: f64,
    pub best_epoch: usize,
    pub adam: AdamState,
}

impl TrainerState {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for v in [self.epoch as u64, self.step as u64, self.best_epoch as u64, self.adam.step] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.best_dev_loss.to_le_bytes());
        out.extend_from_slice(&(self.adam.m.len() as u64).to_le_bytes());
        for (m, v) in self.adam.m.iter().zip(&self.adam.v) {
            out.extend_from_slice(&(m.len() as u64).to_le_bytes());
            for x in m.iter().chain(v) {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Checkpoint(format!("trainer state: {msg}"));
        if bytes.len() < MAGIC.len() + 4 + 32 {
            return Err(bad("truncated"));
        }
        let (body, stored) = bytes.split_at(bytes.len() - 32);
        let computed = Sha256::digest(body);
        if computed.as_slice() != stored {
            return Err(Error::Checksum { stored: hex::encode(stored), computed: hex::encode(computed) });
        }
        if &body[..8] != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u32::from_le_bytes(body[8..12].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let mut words = body[12..].chunks(8);
        let mut next =
            || -> Result<[u8; 8]> { words.next().and_then(|c| c.try_into().ok()).ok_or_else(|| bad("truncated")) };
        let mut u = || -> Result<usize> { Ok(u64::from_le_bytes(next()?) as usize) };
        let epoch = u()?;
        let step = u()?;
        let best_epoch = u()?;
        let adam_step = u()? as u64;
        let best_dev_loss = f64::from_bits(u()? as u64);
        let n = u()?;
        let mut m = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            let len = u()?;
            let mut read = |len| -> Result<Vec<f64>> { (0..len).map(|_| Ok(f64::from_bits(u()? as u64))).collect() };
            m.push(read(len)?);
            v.push(read(len)?);
        }
        Ok(TrainerState { epoch, step, best_dev_loss, best_epoch, adam: AdamState { step: adam_step, m, v } })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_bytes())?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
