//! Deterministic DSP primitives: WAV input, framing, pitch tracking, voicing
//! segmentation and the per-frame voice descriptors every higher-level
//! feature is built from.
//!
//! Everything here is a pure function of its inputs.

mod frame;
mod perturbation;
mod pitch;
mod segments;
mod voice;
mod wav;

pub use frame::{frame_count, frame_signal, loudness_track, FrameSpec};
pub use perturbation::{extract_periods, jitter_local, jitter_ppq5, shimmer_db, shimmer_local, Periods};
pub use pitch::{estimate_f0, normalized_autocorrelation, PitchConfig};
pub use segments::{segment_voicing, SegmentConfig};
pub use voice::{alpha_ratio, hnr, hnr_from_correlation, loudness, AlphaRatio, HNR_CLAMP_DB, LOUDNESS_FLOOR_DB};
pub use wav::{read_wav, write_wav};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum SignalError {
    #[error("cannot open audio file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: not a readable PCM/float WAV file: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("{0}: audio contains no samples")]
    EmptyAudio(PathBuf),
    #[error("audio of {samples} samples is shorter than one {frame_len}-sample frame")]
    TooShort { samples: usize, frame_len: usize },
    #[error("invalid frame parameters: frame_len {frame_len} s, hop {hop} s")]
    InvalidFrame { frame_len: f64, hop: f64 },
    #[error("invalid pitch range [{f0_min}, {f0_max}] Hz")]
    InvalidPitchRange { f0_min: f64, f0_max: f64 },
    #[error("sample rate {sample_rate} Hz is too low: need more than {required} Hz")]
    SampleRateTooLow { sample_rate: u32, required: f64 },
    #[error("track length mismatch: {0} vs {1} frames")]
    TrackMismatch(usize, usize),
}

/// Mono audio with amplitudes normalised to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        AudioBuffer {
            samples,
            sample_rate,
        }
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Converts a time in seconds to the nearest sample index.
    pub fn sample_at(&self, t: f64) -> usize {
        (t * self.sample_rate as f64).round().max(0.0) as usize
    }

    /// Copy of the samples between `start` and `end` seconds (clipped to the buffer).
    pub fn slice_time(&self, start: f64, end: f64) -> AudioBuffer {
        let a = self.sample_at(start).min(self.len());
        let b = self.sample_at(end).min(self.len()).max(a);
        AudioBuffer::new(self.samples[a..b].to_vec(), self.sample_rate)
    }
}

/// One value per analysis frame. Frame `t` sits at `start_offset + t * hop`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrack {
    pub values: Vec<f64>,
    pub frame_len: f64,
    pub hop: f64,
    pub start_offset: f64,
}

impl FrameTrack {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_of(&self, t: usize) -> f64 {
        self.start_offset + t as f64 * self.hop
    }
}

/// Pitch contour. `f0_hz[t] == 0` marks an unvoiced frame, which happens
/// exactly when `voicing[t] < threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Track {
    pub f0_hz: Vec<f64>,
    pub voicing: Vec<f64>,
    pub hop: f64,
    pub frame_len: f64,
    pub threshold: f64,
}

impl F0Track {
    pub fn len(&self) -> usize {
        self.f0_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0_hz.is_empty()
    }

    pub fn is_voiced(&self, t: usize) -> bool {
        self.f0_hz[t] > 0.0
    }

    pub fn voiced_fraction(&self) -> f64 {
        if self.f0_hz.is_empty() {
            return 0.0;
        }
        self.f0_hz.iter().filter(|&&f| f > 0.0).count() as f64 / self.f0_hz.len() as f64
    }

    /// Maximal runs of consecutive voiced frames as half-open frame ranges.
    pub fn voiced_runs(&self) -> Vec<std::ops::Range<usize>> {
        let mut runs = Vec::new();
        let mut start = None;
        for (t, &f) in self.f0_hz.iter().enumerate() {
            match (f > 0.0, start) {
                (true, None) => start = Some(t),
                (false, Some(s)) => {
                    runs.push(s..t);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push(s..self.f0_hz.len());
        }
        runs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    Voiced,
    Unvoiced,
    Pause,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoicedSegment {
    pub start: f64,
    pub end: f64,
    pub kind: SegmentKind,
}

impl VoicedSegment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}
