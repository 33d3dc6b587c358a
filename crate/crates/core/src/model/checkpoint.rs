//! Binary checkpoint: magic, version, config JSON, parameters as little-endian
//! `f64`, optional static length table, trailing SHA-256 of everything before it.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::length::StaticLengthTable;
use crate::tensor::{ParamStore, Tensor};

use super::config::ModelConfig;
use super::net::SegmentalModel;

const MAGIC: &[u8; 8] = b"SEGATTCK";
const VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Checkpoint("length overflows usize".into()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("size overflow".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}

fn put_f64s(out: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

impl SegmentalModel {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let config = serde_json::to_vec(&self.config)?;
        out.extend_from_slice(&(config.len() as u64).to_le_bytes());
        out.extend_from_slice(&config);
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for (_, p) in self.params.iter() {
            out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
            out.extend_from_slice(p.name.as_bytes());
            out.push(u8::from(p.trainable));
            let shape = p.value.shape();
            out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
            for &d in shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            put_f64s(&mut out, p.value.data());
        }
        match &self.static_length {
            Some(table) => {
                out.push(1);
                out.extend_from_slice(&(table.delta_max() as u64).to_le_bytes());
                out.extend_from_slice(&(table.mu().len() as u64).to_le_bytes());
                put_f64s(&mut out, table.mu());
            }
            None => out.push(0),
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + DIGEST_LEN {
            return Err(Error::Checkpoint("file too short".into()));
        }
        let (body, stored) = bytes.split_at(bytes.len() - DIGEST_LEN);
        let computed = Sha256::digest(body);
        if computed.as_slice() != stored {
            return Err(Error::Checksum { stored: hex::encode(stored), computed: hex::encode(computed) });
        }
        let mut r = Reader { buf: body, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let n = r.len()?;
        let config: ModelConfig = serde_json::from_slice(r.take(n)?)?;
        let count = r.len()?;
        let mut params = ParamStore::new();
        for _ in 0..count {
            let n = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(n)?)
                .map_err(|_| Error::Checkpoint("parameter name is not UTF-8".into()))?
                .to_string();
            let trainable = r.u8()? != 0;
            let ndim = r.u32()? as usize;
            let shape = (0..ndim).map(|_| r.len()).collect::<Result<Vec<_>>>()?;
            let size = shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
            let size = size.ok_or_else(|| Error::Checkpoint("parameter size overflow".into()))?;
            let data = r.f64s(size)?;
            params.insert(&name, Tensor::new(shape, data)?, trainable)?;
        }
        let static_length = match r.u8()? {
            0 => None,
            1 => {
                let delta_max = r.len()?;
                let n = r.len()?;
                Some(StaticLengthTable::from_means(r.f64s(n)?, delta_max)?)
            }
            other => return Err(Error::Checkpoint(format!("bad static table flag {other}"))),
        };
        if r.pos != body.len() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        let mut model = SegmentalModel::from_params(config, params)?;
        model.static_length = static_length;
        Ok(model)
    }

    /// Writes via a temporary file and rename so a crash never leaves a partial checkpoint.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_bytes()?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> SegmentalModel {
        let config = ModelConfig {
            input_dim: 3,
            enc_dim: 4,
            dec_dim: 5,
            att_dim: 3,
            readout_dim: 2,
            len_dim: 3,
            vocab_size: 4,
            ..ModelConfig::default()
        };
        let mut m = SegmentalModel::new(config, 11).unwrap();
        m.static_length = Some(StaticLengthTable::from_means(vec![1.5, 2.0, 3.25, 4.0], 6).unwrap());
        m
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let bytes = m.to_bytes().unwrap();
        let back = SegmentalModel::from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn corruption_is_detected() {
        let mut bytes = model().to_bytes().unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x10;
        assert!(matches!(SegmentalModel::from_bytes(&bytes), Err(Error::Checksum { .. })));
        assert!(SegmentalModel::from_bytes(&bytes[..20]).is_err());
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let m = model();
        m.save(&path).unwrap();
        assert_eq!(SegmentalModel::load(&path).unwrap(), m);
    }
}
