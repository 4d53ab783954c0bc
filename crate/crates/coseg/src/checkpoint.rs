//! Binary checkpoints: model configuration, training step count and every
//! named tensor (parameters of both encoders, the reconstructor, and the
//! memory queue).
//!
//! Little-endian layout: magic `CSGC`, `u16` version, seven `u32` config
//! fields plus `f32` momentum, `u64` steps, `u32` record count, then per
//! record `u16` name length, UTF-8 name, `u8` rank, `u32` dims, `f32` values.

use std::fs;
use std::path::Path;

use coseg_core::train::{CosegModel, ModelConfig};
use coseg_core::Tensor;
use thiserror::Error;

use crate::error::{CliError, Result};

pub const MAGIC: [u8; 4] = *b"CSGC";
pub const VERSION: u16 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckpointError {
    #[error("bad magic {found:?}, expected \"CSGC\"")]
    BadMagic { found: Vec<u8> },
    #[error("unsupported version {found}, expected {VERSION}")]
    UnsupportedVersion { found: u16 },
    #[error("truncated while reading {what}")]
    Truncated { what: &'static str },
    #[error("{extra} bytes after the last record")]
    TrailingBytes { extra: usize },
    #[error("record {index}: {detail}")]
    Record { index: usize, detail: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub steps: u64,
    pub tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn from_model(model: &CosegModel, steps: u64) -> Self {
        Checkpoint {
            config: model.config,
            steps,
            tensors: model.named_tensors(),
        }
    }

    pub fn to_model(&self) -> Result<CosegModel> {
        let mut model = CosegModel::new(self.config, 0)?;
        model.load_named(&self.tensors)?;
        Ok(model)
    }

    pub fn encode(&self) -> Vec<u8> {
        let c = &self.config;
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for v in [c.input_dim, c.embed_dim, c.heads, c.layers, c.window, c.queue_capacity] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&c.alpha.to_le_bytes());
        out.extend_from_slice(&self.steps.to_le_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(t.rank() as u8);
            for &d in t.shape() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != MAGIC {
            return Err(CheckpointError::BadMagic { found: magic.to_vec() });
        }
        let version = r.u16("version")?;
        if version != VERSION {
            return Err(CheckpointError::UnsupportedVersion { found: version });
        }
        let mut dims = [0usize; 6];
        for d in &mut dims {
            *d = r.u32("model config")? as usize;
        }
        let alpha = r.f32("model config")?;
        let [input_dim, embed_dim, heads, layers, window, queue_capacity] = dims;
        let config = ModelConfig {
            input_dim,
            embed_dim,
            heads,
            layers,
            window,
            queue_capacity,
            alpha,
        };
        let steps = r.u64("step count")?;
        let count = r.u32("record count")? as usize;
        let mut tensors = Vec::with_capacity(count.min(4096));
        for index in 0..count {
            let len = r.u16("record name")? as usize;
            let name = std::str::from_utf8(r.take(len, "record name")?)
                .map_err(|_| CheckpointError::Record {
                    index,
                    detail: "name is not UTF-8".into(),
                })?
                .to_string();
            let rank = r.take(1, "record rank")?[0] as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u32("record shape")? as usize);
            }
            let numel = shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| CheckpointError::Record {
                    index,
                    detail: format!("shape {shape:?} overflows"),
                })?;
            let raw = r.take(numel.checked_mul(4).ok_or(CheckpointError::Truncated { what: "record values" })?, "record values")?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("four bytes")))
                .collect();
            let t = Tensor::new(&shape, data).map_err(|e| CheckpointError::Record {
                index,
                detail: e.to_string(),
            })?;
            tensors.push((name, t));
        }
        if r.pos != bytes.len() {
            return Err(CheckpointError::TrailingBytes {
                extra: bytes.len() - r.pos,
            });
        }
        Ok(Checkpoint { config, steps, tensors })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(CliError::io(path))?;
        Checkpoint::decode(&bytes).map_err(|source| CliError::Checkpoint {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Writes through a temporary sibling so a failed write never clobbers
    /// an existing checkpoint.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.encode()).map_err(CliError::io(&tmp))?;
        fs::rename(&tmp, path).map_err(CliError::io(path))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(CheckpointError::Truncated { what }),
        }
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, CheckpointError> {
        self.take(2, what).map(|b| u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, CheckpointError> {
        self.take(4, what).map(|b| u32::from_le_bytes(b.try_into().expect("four bytes")))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, CheckpointError> {
        self.take(8, what).map(|b| u64::from_le_bytes(b.try_into().expect("eight bytes")))
    }

    fn f32(&mut self, what: &'static str) -> Result<f32, CheckpointError> {
        self.take(4, what).map(|b| f32::from_le_bytes(b.try_into().expect("four bytes")))
    }
}
