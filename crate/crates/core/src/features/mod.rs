//! Multi-level feature assembly.
//!
//! Every sample yields a [`FeatureBundle`]:
//!
//! * `word_seq`: one 42-wide row per aligned word, syntax (20) then prosody (22);
//! * `utterance`: sentiment (`sentiment_dim`) then rhythm (34);
//! * `embeddings`: precomputed encoder outputs, read from `MLEV` files.
//!
//! Slot names for the acoustic blocks are listed in [`PROSODY_LAYOUT`] and
//! [`RHYTHM_LAYOUT`].

mod lexical;
mod prosody;
pub(crate) mod stats;

pub use lexical::{
    fallback_tag, tokenize, utterance_sentiment, word_syntax, Lexicons, DEFAULT_SENTIMENT_DIM, PERSON_OFFSET,
    SYNTAX_DIM, UPOS,
};
pub use prosody::{utterance_rhythm, word_prosody, WordProsody, PROSODY_DIM, PROSODY_LAYOUT, RHYTHM_DIM, RHYTHM_LAYOUT};

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataio::{read_matrix, DataError, Manifest, Sample};
use crate::signal::{read_wav, PitchConfig, SegmentConfig, SignalError};
use crate::tensor::Tensor;

pub const WORD_DIM: usize = SYNTAX_DIM + PROSODY_DIM;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordAlignment {
    pub token: String,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    /// `n x 42`; zero rows when the sample has no alignments.
    pub word_seq: Tensor,
    /// Empty when the utterance level is disabled.
    pub utterance: Vec<f64>,
    /// `frames x dim` per source; a single row stands for a pooled vector.
    pub embeddings: BTreeMap<String, Tensor>,
}

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("word span [{start}, {end}] s lies outside the {duration} s recording")]
    SpanOutside { start: f64, end: f64, duration: f64 },
    #[error("{what} sidecar vector has {found} values, expected {expected}")]
    SidecarDimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("syntax sidecar has {found} word vectors for {expected} alignments")]
    SidecarWordCount { expected: usize, found: usize },
    #[error("{path}:{line}: {message}")]
    Sidecar {
        path: std::path::PathBuf,
        line: usize,
        message: String,
    },
    #[error("empty token")]
    EmptyToken,
    #[error("sample {id}: {source}")]
    InSample {
        id: String,
        #[source]
        source: Box<FeatureError>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub pitch: PitchConfig,
    pub segments: SegmentConfig,
    pub sentiment_dim: usize,
    pub lexicons: Lexicons,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            pitch: PitchConfig::default(),
            segments: SegmentConfig::default(),
            sentiment_dim: DEFAULT_SENTIMENT_DIM,
            lexicons: Lexicons::default(),
        }
    }
}

impl FeatureConfig {
    pub fn utterance_dim(&self) -> usize {
        self.sentiment_dim + RHYTHM_DIM
    }
}

/// Externally produced text features keyed by sample id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sidecars {
    /// One 20-vector per aligned word.
    pub syntax: HashMap<String, Vec<Vec<f64>>>,
    /// One sentiment vector per sample.
    pub sentiment: HashMap<String, Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SyntaxLine {
    id: String,
    words: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SentimentLine {
    id: String,
    vector: Vec<f64>,
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, FeatureError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| FeatureError::Sidecar {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

impl Sidecars {
    /// Syntax sidecar lines look like `{"id": "s1", "words": [[...20 values...], ...]}`.
    pub fn load_syntax(&mut self, path: impl AsRef<Path>) -> Result<(), FeatureError> {
        for l in read_jsonl::<SyntaxLine>(path.as_ref())? {
            self.syntax.insert(l.id, l.words);
        }
        Ok(())
    }

    /// Sentiment sidecar lines look like `{"id": "s1", "vector": [...]}`.
    pub fn load_sentiment(&mut self, path: impl AsRef<Path>) -> Result<(), FeatureError> {
        for l in read_jsonl::<SentimentLine>(path.as_ref())? {
            self.sentiment.insert(l.id, l.vector);
        }
        Ok(())
    }
}

/// Reads the sample's audio and embedding files and assembles every level.
/// Errors name the sample.
pub fn build_bundle(
    sample: &Sample,
    manifest: &Manifest,
    sidecars: &Sidecars,
    config: &FeatureConfig,
) -> Result<FeatureBundle, FeatureError> {
    let wrap = |e: FeatureError| FeatureError::InSample {
        id: sample.id.clone(),
        source: Box::new(e),
    };
    let audio = read_wav(manifest.resolve(&sample.wav)).map_err(|e| wrap(e.into()))?;
    let mut bundle = bundle_from_audio(
        &audio,
        &sample.words,
        &sample.transcript,
        sidecars.syntax.get(&sample.id).map(Vec::as_slice),
        sidecars.sentiment.get(&sample.id).map(Vec::as_slice),
        config,
    )
    .map_err(wrap)?;
    for (name, rel) in &sample.embeddings {
        let m = read_matrix(manifest.resolve(rel)).map_err(|e| wrap(e.into()))?;
        bundle.embeddings.insert(name.clone(), m.to_tensor());
    }
    Ok(bundle)
}

/// Word and utterance levels from in-memory audio; `embeddings` is left empty.
pub fn bundle_from_audio(
    audio: &crate::signal::AudioBuffer,
    words: &[WordAlignment],
    transcript: &str,
    syntax_sidecar: Option<&[Vec<f64>]>,
    sentiment_sidecar: Option<&[f64]>,
    config: &FeatureConfig,
) -> Result<FeatureBundle, FeatureError> {
    if let Some(side) = syntax_sidecar {
        if side.len() != words.len() {
            return Err(FeatureError::SidecarWordCount {
                expected: words.len(),
                found: side.len(),
            });
        }
    }
    let mut word_seq = Tensor::zeros(&[words.len(), WORD_DIM]);
    for (i, w) in words.iter().enumerate() {
        let syntax = word_syntax(&w.token, syntax_sidecar.map(|s| s[i].as_slice()))?;
        let prosody = word_prosody(audio, words, i, config)?;
        let row = word_seq.row_mut(i);
        row[..SYNTAX_DIM].copy_from_slice(&syntax);
        row[SYNTAX_DIM..].copy_from_slice(&prosody.values);
    }
    let mut utterance = utterance_sentiment(transcript, sentiment_sidecar, &config.lexicons, config.sentiment_dim)?;
    utterance.extend_from_slice(&utterance_rhythm(audio, words, config)?);
    Ok(FeatureBundle {
        word_seq,
        utterance,
        embeddings: BTreeMap::new(),
    })
}
