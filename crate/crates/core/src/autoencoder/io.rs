//! Model container:
//!
//! ```text
//! "RTAE" | version u32 | float width u8 | header len u64 | header JSON
//!        | array count u64 | (len u64, values...)* | crc32 u32
//! ```
//!
//! All integers and floats are little-endian. The header carries the spec and
//! the normalization statistics; the arrays are the parameter buffers in
//! layer order. The checksum covers every preceding byte.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{build, Autoencoder};
use super::spec::AutoencoderSpec;
use super::{AutoencoderError, Result};
use crate::neuralcore::{Real, REAL_WIDTH};
use crate::trackdata::NormStats;

pub const MAGIC: &[u8; 4] = b"RTAE";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    spec: AutoencoderSpec,
    norm_stats: NormStats,
}

pub fn write_model(model: &Autoencoder) -> Vec<u8> {
    let header = serde_json::to_vec(&Header {
        spec: model.spec.clone(),
        norm_stats: model.norm_stats.clone(),
    })
    .expect("header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(REAL_WIDTH);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    let params = model.param_slices();
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&(p.len() as u64).to_le_bytes());
        for v in p {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| AutoencoderError::Corrupt(format!("unexpected end of data at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_model(bytes: &[u8]) -> Result<Autoencoder> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(AutoencoderError::BadMagic);
    }
    if bytes.len() < 8 {
        return Err(AutoencoderError::Corrupt("file ends inside the header".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(AutoencoderError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    if bytes.len() < 12 {
        return Err(AutoencoderError::Corrupt("file too short for a checksum".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(AutoencoderError::ChecksumMismatch { stored, computed });
    }

    let mut cur = Cursor { buf: body, pos: 8 };
    let width = cur.take(1)?[0];
    if width != REAL_WIDTH {
        return Err(AutoencoderError::WidthMismatch {
            found: width,
            expected: REAL_WIDTH,
        });
    }
    let header_len = cur.u64()? as usize;
    let header: Header = serde_json::from_slice(cur.take(header_len)?)
        .map_err(|e| AutoencoderError::Corrupt(format!("bad header: {e}")))?;
    let mut model = build(&header.spec)?;
    model.norm_stats = header.norm_stats;

    let n_arrays = cur.u64()? as usize;
    let mut slots = model.param_slices_mut();
    if n_arrays != slots.len() {
        return Err(AutoencoderError::Corrupt(format!(
            "spec implies {} parameter arrays, file has {n_arrays}",
            slots.len()
        )));
    }
    let w = REAL_WIDTH as usize;
    for (i, slot) in slots.iter_mut().enumerate() {
        let len = cur.u64()? as usize;
        if len != slot.len() {
            return Err(AutoencoderError::Corrupt(format!(
                "array {i}: expected {} values, found {len}",
                slot.len()
            )));
        }
        let raw = cur.take(len.checked_mul(w).ok_or_else(|| AutoencoderError::Corrupt("length overflow".into()))?)?;
        for (v, chunk) in slot.iter_mut().zip(raw.chunks_exact(w)) {
            *v = Real::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(AutoencoderError::Corrupt(format!("array {i} holds a non-finite value")));
            }
        }
    }
    if cur.pos != body.len() {
        return Err(AutoencoderError::Corrupt("trailing bytes after parameters".into()));
    }
    Ok(model)
}

pub fn save_model(model: &Autoencoder, path: &Path) -> Result<()> {
    fs::write(path, write_model(model)).map_err(|source| AutoencoderError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<Autoencoder> {
    let bytes = fs::read(path).map_err(|source| AutoencoderError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_model(&bytes)
}
