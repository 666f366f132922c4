//! Binary tensor sidecar.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic   "LCAB"
//! version u32 = 1
//! blocks  f32 * n, one block per token, referenced by byte offset
//! ```
//!
//! A block holds the token's logits followed by its hidden state. Full mode
//! stores `V` logits. Topk mode stores `K` interleaved `(index, logit)` pairs
//! (the index as an integer-valued `f32`) and then the tail-bucket logit.

use crate::error::{Error, Result};

use super::{DatasetHeader, LogitMode, Logits, MAX_TOPK_VOCAB};

pub const MAGIC: &[u8; 4] = b"LCAB";
pub const VERSION: u32 = 1;
pub const PREAMBLE_LEN: usize = 8;

/// Location of one token block, in bytes from the start of the sidecar and in
/// `f32` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorRef {
    pub offset: u64,
    pub len: u64,
}

#[derive(Debug)]
pub struct SidecarWriter {
    buf: Vec<u8>,
}

impl Default for SidecarWriter {
    fn default() -> Self {
        Self::new()
    }
}

impl SidecarWriter {
    pub fn new() -> Self {
        let mut buf = Vec::with_capacity(PREAMBLE_LEN);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        Self { buf }
    }

    pub fn push(&mut self, logits: &Logits, hidden: &[f32]) -> TensorRef {
        let offset = self.buf.len() as u64;
        let start = self.buf.len();
        match logits {
            Logits::Full(values) => self.extend(values),
            Logits::TopK {
                indices,
                values,
                tail,
            } => {
                for (&i, &v) in indices.iter().zip(values) {
                    self.extend(&[i as f32, v]);
                }
                self.extend(&[*tail]);
            }
        }
        self.extend(hidden);
        TensorRef {
            offset,
            len: ((self.buf.len() - start) / 4) as u64,
        }
    }

    fn extend(&mut self, values: &[f32]) {
        for v in values {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Read-only view over sidecar bytes with a verified preamble.
#[derive(Debug, Clone, Copy)]
pub struct Sidecar<'a> {
    bytes: &'a [u8],
}

impl<'a> Sidecar<'a> {
    pub fn new(bytes: &'a [u8]) -> Result<Self> {
        if bytes.len() < PREAMBLE_LEN || &bytes[..4] != MAGIC {
            return Err(Error::invalid("sidecar does not start with magic LCAB"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(Error::invalid(format!(
                "unsupported sidecar version {version}"
            )));
        }
        Ok(Self { bytes })
    }

    /// Decodes the block at `r` into logits and hidden state.
    pub fn read(&self, r: TensorRef, header: &DatasetHeader) -> Result<(Logits, Vec<f32>)> {
        let expected = header.floats_per_step();
        if r.len != expected as u64 {
            return Err(Error::dims("tensor_ref.len", expected, r.len as usize));
        }
        let start = usize::try_from(r.offset)
            .ok()
            .filter(|&o| o >= PREAMBLE_LEN)
            .ok_or_else(|| Error::invalid(format!("tensor_ref.offset {} out of range", r.offset)))?;
        let end = start
            .checked_add(expected * 4)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::invalid(format!(
                    "tensor_ref at offset {} runs past the end of the sidecar ({} bytes)",
                    r.offset,
                    self.bytes.len()
                ))
            })?;
        let floats: Vec<f32> = self.bytes[start..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();

        let (logits, hidden) = match header.logit_mode {
            LogitMode::Full => {
                let (l, h) = floats.split_at(header.vocab_size);
                (Logits::Full(l.to_vec()), h)
            }
            LogitMode::Topk(k) => {
                let k = k as usize;
                let (l, h) = floats.split_at(2 * k + 1);
                let mut indices = Vec::with_capacity(k);
                let mut values = Vec::with_capacity(k);
                for pair in l[..2 * k].chunks_exact(2) {
                    indices.push(decode_index(pair[0], header.vocab_size)?);
                    values.push(pair[1]);
                }
                (
                    Logits::TopK {
                        indices,
                        values,
                        tail: l[2 * k],
                    },
                    h,
                )
            }
        };
        Ok((logits, hidden.to_vec()))
    }
}

fn decode_index(raw: f32, vocab_size: usize) -> Result<u32> {
    let limit = vocab_size.min(MAX_TOPK_VOCAB) as f32;
    if !(raw.is_finite() && raw >= 0.0 && raw < limit && raw.fract() == 0.0) {
        return Err(Error::invalid(format!("invalid topk index {raw} in sidecar")));
    }
    Ok(raw as u32)
}
