//! Multi-level acoustic/textual speech-emotion toolkit.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`signal`]: WAV input, framing, pitch tracking and per-frame voice descriptors.
//! - [`features`]: word-level (syntax + prosody), utterance-level (sentiment + rhythm)
//!   and embedding-level feature bundles.
//! - [`neural`]: the fusion network (2-layer LSTM, piecewise-linear embeddings,
//!   Perceiver fusion, attentive statistics pooling), losses, training and checkpoints.
//! - [`ensemble`]: rank-based uncertainty ensemble plus averaging and majority baselines.
//! - [`metrics`]: Macro-F1, accuracy and concordance correlation.
//! - [`dataio`]: manifests, the `MLEV` matrix format, prediction CSVs, soft labels
//!   and balanced evaluation splits.
//! - [`cli`]: the batch workflow behind the `mater` binary.
//!
//! Runnable walkthroughs for each capability live in `crates/core/examples/`.

pub mod category;
pub mod cli;
pub mod dataio;
pub mod ensemble;
pub mod features;
pub mod metrics;
pub mod neural;
pub mod signal;
pub mod synth;
pub mod tensor;

pub use category::{Category, NUM_CATEGORIES};
pub use tensor::Tensor;
