//! Frame-wise pitch tracking by normalised autocorrelation.
//!
//! For every analysis frame a window of at least `periods_per_window / f0_min`
//! seconds is centred on the frame, its mean removed, and the normalised
//! cross-correlation
//!
//! ```text
//! r(τ) = Σ x[i]·x[i+τ] / sqrt(Σ x[i]² · Σ x[i+τ]²),   i < W - τ
//! ```
//!
//! evaluated over the lag range `[sr/f0_max, sr/f0_min]`. The smallest-lag local
//! maximum within 90% of the best peak is taken (this avoids octave-down
//! errors on strongly periodic input) and refined by parabolic interpolation.
//! Its correlation value is the voicing strength.

use super::{AudioBuffer, F0Track, FrameSpec, SignalError};
use super::frame::frame_count;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PitchConfig {
    pub frame: FrameSpec,
    pub f0_min: f64,
    pub f0_max: f64,
    pub voicing_threshold: f64,
    /// Minimum analysis window, in periods of `f0_min`.
    pub periods_per_window: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        PitchConfig {
            frame: FrameSpec::default(),
            f0_min: 60.0,
            f0_max: 500.0,
            voicing_threshold: 0.45,
            periods_per_window: 3.0,
        }
    }
}

impl PitchConfig {
    pub fn with_range(f0_min: f64, f0_max: f64) -> Self {
        PitchConfig {
            f0_min,
            f0_max,
            ..PitchConfig::default()
        }
    }

    fn validate(&self, sample_rate: u32) -> Result<(), SignalError> {
        if !(self.f0_min > 0.0 && self.f0_max > self.f0_min) {
            return Err(SignalError::InvalidPitchRange {
                f0_min: self.f0_min,
                f0_max: self.f0_max,
            });
        }
        if sample_rate as f64 <= 2.0 * self.f0_max {
            return Err(SignalError::SampleRateTooLow {
                sample_rate,
                required: 2.0 * self.f0_max,
            });
        }
        Ok(())
    }
}

/// Normalised cross-correlation of `x` with itself shifted by `lag` samples,
/// over the overlapping part. Returns 0 when either part has no energy.
pub fn normalized_autocorrelation(x: &[f64], lag: usize) -> f64 {
    if lag >= x.len() {
        return 0.0;
    }
    let n = x.len() - lag;
    let (mut cross, mut e0, mut e1) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let a = x[i];
        let b = x[i + lag];
        cross += a * b;
        e0 += a * a;
        e1 += b * b;
    }
    let denom = (e0 * e1).sqrt();
    if denom <= f64::MIN_POSITIVE {
        0.0
    } else {
        cross / denom
    }
}

/// Pitch track with one entry per `config.frame` frame of `audio`.
pub fn estimate_f0(audio: &AudioBuffer, config: &PitchConfig) -> Result<F0Track, SignalError> {
    config.validate(audio.sample_rate)?;
    let (frame, hop) = config.frame.in_samples(audio.sample_rate)?;
    let n_frames = frame_count(audio.len(), frame, hop);
    if n_frames == 0 {
        return Err(SignalError::TooShort {
            samples: audio.len(),
            frame_len: frame,
        });
    }

    let sr = audio.sample_rate as f64;
    let wanted = ((config.periods_per_window * sr / config.f0_min).ceil() as usize).max(frame);
    let window_len = wanted.min(audio.len());
    let min_lag = ((sr / config.f0_max).floor() as usize).max(2);
    let max_lag = ((sr / config.f0_min).ceil() as usize).min(window_len * 2 / 3);

    let mut f0_hz = Vec::with_capacity(n_frames);
    let mut voicing = Vec::with_capacity(n_frames);
    let mut window = vec![0.0; window_len];
    for t in 0..n_frames {
        let center = t * hop + frame / 2;
        let start = center
            .saturating_sub(window_len / 2)
            .min(audio.len() - window_len);
        window.copy_from_slice(&audio.samples[start..start + window_len]);
        let (f0, v) = analyse_window(&mut window, sr, min_lag, max_lag, config);
        f0_hz.push(f0);
        voicing.push(v);
    }

    Ok(F0Track {
        f0_hz,
        voicing,
        hop: config.frame.hop,
        frame_len: config.frame.frame_len,
        threshold: config.voicing_threshold,
    })
}

fn analyse_window(
    window: &mut [f64],
    sr: f64,
    min_lag: usize,
    max_lag: usize,
    config: &PitchConfig,
) -> (f64, f64) {
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    window.iter_mut().for_each(|x| *x -= mean);
    let energy: f64 = window.iter().map(|x| x * x).sum();
    if energy <= 1e-12 * window.len() as f64 || max_lag <= min_lag {
        return (0.0, 0.0);
    }

    let lo = min_lag - 1;
    let hi = (max_lag + 1).min(window.len() - 1);
    let r: Vec<f64> = (lo..=hi).map(|lag| normalized_autocorrelation(window, lag)).collect();
    let at = |lag: usize| r[lag - lo];

    let mut peaks = Vec::new();
    for lag in min_lag..=max_lag.min(hi - 1) {
        if at(lag) > at(lag - 1) && at(lag) >= at(lag + 1) {
            peaks.push(lag);
        }
    }
    let best = peaks.iter().map(|&l| at(l)).fold(f64::NEG_INFINITY, f64::max);
    if peaks.is_empty() || best < config.voicing_threshold {
        let v = if peaks.is_empty() { 0.0 } else { best.max(0.0) };
        return (0.0, v);
    }

    let cutoff = (0.9 * best).max(config.voicing_threshold);
    let lag = *peaks.iter().find(|&&l| at(l) >= cutoff).expect("best peak qualifies");
    let (a, b, c) = (at(lag - 1), at(lag), at(lag + 1));
    let curvature = a - 2.0 * b + c;
    let delta = if curvature < 0.0 {
        (0.5 * (a - c) / curvature).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let f0 = (sr / (lag as f64 + delta)).clamp(config.f0_min, config.f0_max);
    (f0, b.clamp(config.voicing_threshold, 1.0))
}
