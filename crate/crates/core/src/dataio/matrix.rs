//! `MLEV` matrix files.
//!
//! ```text
//! offset  size        field
//! 0       4           magic "MLEV"
//! 4       4           version (u32 LE) = 1
//! 8       4           rows (u32 LE)
//! 12      4           cols (u32 LE)
//! 16      4*rows*cols f32 LE values, row-major
//! ```

use std::path::Path;

use super::DataError;
use crate::tensor::Tensor;

pub const MLEV_MAGIC: [u8; 4] = *b"MLEV";
pub const MLEV_VERSION: u32 = 1;
const HEADER_LEN: u64 = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct MlevMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl MlevMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix data length");
        MlevMatrix { rows, cols, data }
    }

    /// Narrows a 1-D or 2-D tensor to `f32` (vectors become a single row).
    pub fn from_tensor(t: &Tensor) -> Self {
        let rows = if t.shape().len() == 2 { t.rows() } else { 1 };
        let cols = if t.shape().len() == 2 { t.cols() } else { t.len() };
        MlevMatrix::new(rows, cols, t.data().iter().map(|&v| v as f32).collect())
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_vec(&[self.rows, self.cols], self.data.iter().map(|&v| v as f64).collect())
            .expect("shape matches data")
    }
}

pub fn encode_matrix(m: &MlevMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN as usize + 4 * m.data.len());
    out.extend_from_slice(&MLEV_MAGIC);
    out.extend_from_slice(&MLEV_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols as u32).to_le_bytes());
    for v in &m.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes an in-memory `MLEV` file; `path` is only used in error messages.
pub fn decode_matrix(bytes: &[u8], path: &Path) -> Result<MlevMatrix, DataError> {
    let actual = bytes.len() as u64;
    if actual < HEADER_LEN {
        return Err(DataError::Truncated {
            path: path.to_path_buf(),
            expected: HEADER_LEN,
            actual,
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let magic: [u8; 4] = bytes[0..4].try_into().expect("4 bytes");
    if magic != MLEV_MAGIC {
        return Err(DataError::BadMagic {
            path: path.to_path_buf(),
            found: magic,
        });
    }
    let version = word(4);
    if version != MLEV_VERSION {
        return Err(DataError::UnsupportedVersion {
            path: path.to_path_buf(),
            version,
        });
    }
    let (rows, cols) = (word(8) as u64, word(12) as u64);
    let overflow = || DataError::DimensionOverflow {
        path: path.to_path_buf(),
        rows,
        cols,
    };
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(overflow)?;
    if usize::try_from(expected).is_err() {
        return Err(overflow());
    }
    if actual != expected {
        return Err(DataError::Truncated {
            path: path.to_path_buf(),
            expected,
            actual,
        });
    }
    let data = bytes[HEADER_LEN as usize..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok(MlevMatrix::new(rows as usize, cols as usize, data))
}

pub fn write_matrix(path: impl AsRef<Path>, m: &MlevMatrix) -> Result<(), DataError> {
    let path = path.as_ref();
    std::fs::write(path, encode_matrix(m)).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<MlevMatrix, DataError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_matrix(&bytes, path)
}
