use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::category::Category;
use crate::features::WordAlignment;

/// Emotional attributes on the 1-7 scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attributes {
    pub valence: f64,
    pub arousal: f64,
    pub dominance: f64,
}

impl Attributes {
    pub fn as_array(&self) -> [f64; 3] {
        [self.valence, self.arousal, self.dominance]
    }
}

/// One utterance. Paths are stored as written and resolved against the
/// manifest's directory by [`Manifest::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample {
    pub id: String,
    pub wav: PathBuf,
    #[serde(default)]
    pub transcript: String,
    #[serde(default)]
    pub words: Vec<WordAlignment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub votes: Option<BTreeMap<String, u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Category>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributes: Option<Attributes>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub embeddings: BTreeMap<String, PathBuf>,
}

impl Sample {
    pub fn has_targets(&self) -> bool {
        self.votes.is_some() || self.label.is_some() || self.attributes.is_some()
    }

    fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty sample id".into());
        }
        if let Some(a) = &self.attributes {
            for (name, v) in [("valence", a.valence), ("arousal", a.arousal), ("dominance", a.dominance)] {
                if !(1.0..=7.0).contains(&v) {
                    return Err(format!("{name} {v} outside [1, 7]"));
                }
            }
        }
        let mut prev_end = f64::NEG_INFINITY;
        for (i, w) in self.words.iter().enumerate() {
            if !(w.start.is_finite() && w.end.is_finite() && w.end > w.start && w.start >= 0.0) {
                return Err(format!("word {i} ({:?}) has invalid span [{}, {}]", w.token, w.start, w.end));
            }
            if w.start < prev_end {
                return Err(format!("word {i} ({:?}) overlaps or precedes its predecessor", w.token));
            }
            prev_end = w.end;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub base_dir: PathBuf,
    pub samples: Vec<Sample>,
}

impl Manifest {
    /// Resolves a manifest-relative path.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn get(&self, id: &str) -> Option<&Sample> {
        self.samples.iter().find(|s| s.id == id)
    }
}

/// Loads a JSON Lines manifest. Blank lines are skipped; every error names
/// the offending line.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let err = |line: usize, message: String| DataError::Manifest {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: Sample = serde_json::from_str(&line).map_err(|e| err(lineno, e.to_string()))?;
        sample.validate().map_err(|m| err(lineno, m))?;
        if !seen.insert(sample.id.clone()) {
            return Err(err(lineno, format!("duplicate sample id {:?}", sample.id)));
        }
        samples.push(sample);
    }
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Manifest { base_dir, samples })
}

/// Writes samples as JSON Lines in canonical field order.
pub fn save_manifest(path: impl AsRef<Path>, samples: &[Sample]) -> Result<(), DataError> {
    let path = path.as_ref();
    let io = |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for s in samples {
        let line = serde_json::to_string(s).expect("samples always serialise");
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}
