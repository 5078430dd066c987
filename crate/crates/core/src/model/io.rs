//! Binary model files.
//!
//! All integers and floats are little endian:
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0 | 8 | magic `AMBIMDL\0` |
//! | 8 | 4 | format version (`u32`, currently 1) |
//! | 12 | 4 | `hash_dim` (`u32`) |
//! | 16 | 4 | `hidden` (`u32`) |
//! | 20 | 4 | number of labels (`u32`, always 3) |
//! | 24 | 4 | n-gram mask (`u32`, bit 0 unigrams, bit 1 bigrams) |
//! | 28 | 4 | reserved, zero |
//! | 32 | 8 | feature hash seed (`u64`) |
//! | 40 | 8 | initialization seed (`u64`) |
//! | 48 | … | `W1`, `b1`, `W2`, `b2` as row-major `f64` |

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::features::FeatureConfig;
use super::network::ClassifierModel;
use super::ModelError;
use crate::dist::NUM_LABELS;

pub const MAGIC: &[u8; 8] = b"AMBIMDL\0";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 48;

pub fn to_bytes(model: &ClassifierModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * model.num_params());
    out.extend_from_slice(MAGIC);
    for word in [
        FORMAT_VERSION,
        model.features.hash_dim as u32,
        model.hidden as u32,
        NUM_LABELS as u32,
        model.features.ngram_mask(),
        0,
    ] {
        out.extend_from_slice(&word.to_le_bytes());
    }
    out.extend_from_slice(&model.features.hash_seed.to_le_bytes());
    out.extend_from_slice(&model.seed.to_le_bytes());
    for block in [&model.w1, &model.b1, &model.w2, &model.b2] {
        for v in block.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            ModelError::Format(format!("truncated model file: wanted {n} bytes at offset {}", self.pos))
        })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, ModelError> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| ModelError::Format("block too large".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<ClassifierModel, ModelError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(8)? != MAGIC {
        return Err(ModelError::Format("bad magic bytes".into()));
    }
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(ModelError::Format(format!("unsupported model format version {version}")));
    }
    let hash_dim = cur.u32()? as usize;
    let hidden = cur.u32()? as usize;
    let labels = cur.u32()? as usize;
    if labels != NUM_LABELS {
        return Err(ModelError::Format(format!("expected {NUM_LABELS} labels, found {labels}")));
    }
    let mask = cur.u32()?;
    let _reserved = cur.u32()?;
    let hash_seed = cur.u64()?;
    let seed = cur.u64()?;
    let features = FeatureConfig { hash_dim, ngram_orders: FeatureConfig::from_mask(mask), hash_seed };
    features.validate()?;
    if hidden == 0 {
        return Err(ModelError::Format("hidden size is zero".into()));
    }
    let w1 = cur.f64s(hash_dim * hidden)?;
    let b1 = cur.f64s(hidden)?;
    let w2 = cur.f64s(hidden * NUM_LABELS)?;
    let b2 = cur.f64s(NUM_LABELS)?;
    if cur.pos != bytes.len() {
        return Err(ModelError::Format(format!("{} trailing bytes", bytes.len() - cur.pos)));
    }
    Ok(ClassifierModel { features, hidden, w1, b1, w2, b2, seed })
}

/// Hex SHA-256 of the serialized model.
pub fn model_hash(model: &ClassifierModel) -> String {
    hex::encode(Sha256::digest(to_bytes(model)))
}

pub fn save(model: &ClassifierModel, path: &Path) -> Result<(), ModelError> {
    fs::write(path, to_bytes(model))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ClassifierModel, ModelError> {
    from_bytes(&fs::read(path)?)
}
