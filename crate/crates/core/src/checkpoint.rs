//! Binary checkpoint framing shared by the bias head, temperature and probe.
//!
//! ```text
//! magic   [u8; 4]        "LCHD" | "LCTS" | "LCPK"
//! version u32 LE = 1
//! rows    u32 LE
//! cols    u32 LE
//! matrix  f32 LE * rows * cols   (row-major)
//! vector  f32 LE * cols
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const VERSION: u32 = 1;
pub const HEAD_MAGIC: [u8; 4] = *b"LCHD";
pub const TEMPERATURE_MAGIC: [u8; 4] = *b"LCTS";
pub const PROBE_MAGIC: [u8; 4] = *b"LCPK";

const PREAMBLE: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub rows: usize,
    pub cols: usize,
    pub matrix: Vec<f32>,
    pub vector: Vec<f32>,
}

pub fn encode_frame(magic: [u8; 4], frame: &Frame) -> Vec<u8> {
    assert_eq!(frame.matrix.len(), frame.rows * frame.cols);
    assert_eq!(frame.vector.len(), frame.cols);
    let mut out = Vec::with_capacity(PREAMBLE + 4 * (frame.matrix.len() + frame.cols));
    out.extend_from_slice(&magic);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(frame.rows as u32).to_le_bytes());
    out.extend_from_slice(&(frame.cols as u32).to_le_bytes());
    for v in frame.matrix.iter().chain(&frame.vector) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_frame(magic: [u8; 4], bytes: &[u8]) -> Result<Frame> {
    let name = String::from_utf8_lossy(&magic).into_owned();
    if bytes.len() < PREAMBLE {
        return Err(Error::invalid(format!("{name} checkpoint truncated")));
    }
    if bytes[..4] != magic {
        return Err(Error::invalid(format!(
            "expected {name} checkpoint, found magic {:?}",
            String::from_utf8_lossy(&bytes[..4])
        )));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let version = word(4);
    if version != VERSION {
        return Err(Error::invalid(format!(
            "unsupported {name} checkpoint version {version}"
        )));
    }
    let rows = word(8) as u64;
    let cols = word(12) as u64;
    let floats = rows as u128 * cols as u128 + cols as u128;
    let expected = PREAMBLE as u128 + 4 * floats;
    if bytes.len() as u128 != expected {
        return Err(Error::invalid(format!(
            "{name} checkpoint for {rows}x{cols} needs {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let values: Vec<f32> = bytes[PREAMBLE..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if !values.iter().all(|v| v.is_finite()) {
        return Err(Error::invalid(format!("{name} checkpoint has non-finite values")));
    }
    let split = (rows * cols) as usize;
    Ok(Frame {
        rows: rows as usize,
        cols: cols as usize,
        vector: values[split..].to_vec(),
        matrix: {
            let mut m = values;
            m.truncate(split);
            m
        },
    })
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}
