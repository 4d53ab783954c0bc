//! Binary feature files.
//!
//! Little-endian layout: magic `CSGF`, `u16` version (1), `u32` dim,
//! `u32` frame count, `f32` fps, then `frames × dim` `f32` values row-major.

use std::fs;
use std::path::Path;

use coseg_core::data::FrameFeatureSequence;
use coseg_core::Tensor;
use thiserror::Error;

use crate::error::{CliError, Result};

pub const MAGIC: [u8; 4] = *b"CSGF";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 18;
pub const EXTENSION: &str = "csgf";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CsgfError {
    #[error("bad magic {found:?}, expected \"CSGF\"")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported version {found}, expected {VERSION}")]
    UnsupportedVersion { found: u16 },
    #[error("truncated: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("{extra} bytes after the declared payload")]
    TrailingBytes { extra: usize },
    #[error("invalid header: {0}")]
    Header(String),
    #[error("non-finite value at frame {frame}, dim {dim}")]
    NonFinite { frame: usize, dim: usize },
}

pub fn encode(seq: &FrameFeatureSequence) -> Vec<u8> {
    let (frames, dim) = (seq.num_frames(), seq.dim());
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * frames * dim);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(frames as u32).to_le_bytes());
    out.extend_from_slice(&seq.fps.to_le_bytes());
    for v in seq.features.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn le_u16(b: &[u8]) -> u16 {
    u16::from_le_bytes([b[0], b[1]])
}

fn le_u32(b: &[u8]) -> u32 {
    u32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

pub fn decode(video_id: &str, bytes: &[u8]) -> Result<FrameFeatureSequence, CsgfError> {
    if bytes.len() < 4 {
        return Err(CsgfError::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let found: [u8; 4] = bytes[..4].try_into().expect("four bytes");
    if found != MAGIC {
        return Err(CsgfError::BadMagic { found });
    }
    if bytes.len() < HEADER_LEN {
        return Err(CsgfError::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let version = le_u16(&bytes[4..6]);
    if version != VERSION {
        return Err(CsgfError::UnsupportedVersion { found: version });
    }
    let dim = le_u32(&bytes[6..10]) as usize;
    let frames = le_u32(&bytes[10..14]) as usize;
    let fps = f32::from_le_bytes(bytes[14..18].try_into().expect("four bytes"));
    if dim == 0 || frames == 0 {
        return Err(CsgfError::Header(format!("{frames} frames of width {dim}")));
    }
    if !(fps.is_finite() && fps > 0.0) {
        return Err(CsgfError::Header(format!("fps {fps}")));
    }
    let expected = frames
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| CsgfError::Header(format!("{frames} × {dim} values overflow")))?;
    if bytes.len() < expected {
        return Err(CsgfError::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(CsgfError::TrailingBytes {
            extra: bytes.len() - expected,
        });
    }
    let data: Vec<f32> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("four bytes")))
        .collect();
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(CsgfError::NonFinite {
            frame: i / dim,
            dim: i % dim,
        });
    }
    let features = Tensor::matrix(frames, dim, data).expect("length checked above");
    Ok(FrameFeatureSequence::new(video_id, fps, features).expect("validated above"))
}

/// Reads a feature file; the video id is the file stem.
pub fn load_feature_file(path: &Path) -> Result<FrameFeatureSequence> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| CliError::Config(format!("{}: file name is not valid UTF-8", path.display())))?;
    decode(id, &bytes).map_err(|source| CliError::Features {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_feature_file(seq: &FrameFeatureSequence, path: &Path) -> Result<()> {
    fs::write(path, encode(seq)).map_err(CliError::io(path))
}
