//! Data interchange: sample manifests, the `MLEV` matrix format, prediction
//! CSVs, soft-label construction and balanced evaluation splits.

mod manifest;
mod matrix;
mod predictions;
mod splits;

pub use manifest::{load_manifest, save_manifest, Attributes, Manifest, Sample};
pub use matrix::{decode_matrix, encode_matrix, read_matrix, write_matrix, MlevMatrix, MLEV_MAGIC, MLEV_VERSION};
pub use predictions::{
    read_predictions, write_predictions, AttributePredictions, CategoricalPredictions, PredictionFile,
    ATTRIBUTE_HEADER, CATEGORICAL_HEADER,
};
pub use splits::{balanced_splits, SplitSpec};

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::category::{Category, NUM_CATEGORIES};
use crate::neural::SoftTarget;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: bad magic {found:?}, expected \"MLEV\"")]
    BadMagic { path: PathBuf, found: [u8; 4] },
    #[error("{path}: unsupported MLEV version {version}")]
    UnsupportedVersion { path: PathBuf, version: u32 },
    #[error("{path}: expected {expected} bytes, found {actual}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },
    #[error("{path}: matrix dimensions {rows}x{cols} overflow")]
    DimensionOverflow { path: PathBuf, rows: u64, cols: u64 },
    #[error("{path}: header mismatch: expected `{expected}`, found `{found}`")]
    HeaderMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path}: row {row}: {message}")]
    Csv {
        path: PathBuf,
        row: usize,
        message: String,
    },
    #[error("no usable votes among the eight categories")]
    NoVotes,
    #[error("class {class} has {available} samples, {needed} requested per set")]
    InsufficientClass {
        class: Category,
        available: usize,
        needed: usize,
    },
    #[error("invalid split spec: {0}")]
    InvalidSplit(String),
}

/// Normalises annotator vote counts over the eight categories into a target
/// distribution. Votes for labels outside the eight (e.g. "Other") are ignored.
pub fn soft_targets(votes: &BTreeMap<String, u32>) -> Result<SoftTarget, DataError> {
    let mut counts = [0.0; NUM_CATEGORIES];
    for (label, &n) in votes {
        if let Some(c) = Category::from_code(label.trim()) {
            counts[c.index()] += n as f64;
        }
    }
    let total: f64 = counts.iter().sum();
    if total < 1.0 {
        return Err(DataError::NoVotes);
    }
    Ok(SoftTarget::new(counts.map(|c| c / total)).expect("normalised counts lie on the simplex"))
}
