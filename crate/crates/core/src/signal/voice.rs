//! Per-frame voice-quality descriptors: RMS loudness, harmonics-to-noise ratio
//! and the alpha ratio.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::pitch::normalized_autocorrelation;
use super::SignalError;

pub const LOUDNESS_FLOOR_DB: f64 = -80.0;
pub const HNR_CLAMP_DB: f64 = 60.0;

const LOW_BAND: (f64, f64) = (50.0, 1000.0);
const HIGH_BAND: (f64, f64) = (1000.0, 5000.0);

/// RMS level `20 log10(rms)` in dB, floored at -80 dB. Stands in for auditory
/// loudness.
pub fn loudness(frame: &[f64]) -> f64 {
    if frame.is_empty() {
        return LOUDNESS_FLOOR_DB;
    }
    let ms = frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64;
    if ms <= 0.0 {
        return LOUDNESS_FLOOR_DB;
    }
    (10.0 * ms.log10()).max(LOUDNESS_FLOOR_DB)
}

/// `10 log10(r / (1 - r))` clamped to ±60 dB.
pub fn hnr_from_correlation(r: f64) -> f64 {
    if r <= 0.0 {
        return -HNR_CLAMP_DB;
    }
    if r >= 1.0 {
        return HNR_CLAMP_DB;
    }
    (10.0 * (r / (1.0 - r)).log10()).clamp(-HNR_CLAMP_DB, HNR_CLAMP_DB)
}

/// Harmonics-to-noise ratio of a voiced frame. The normalised autocorrelation
/// of the mean-removed frame is linearly interpolated at the fractional lag
/// `sample_rate / f0`. Returns `None` for `f0 <= 0` (unvoiced) or when the lag
/// does not fit in the frame.
pub fn hnr(frame: &[f64], f0_hz: f64, sample_rate: u32) -> Option<f64> {
    if !(f0_hz > 0.0) {
        return None;
    }
    let lag = sample_rate as f64 / f0_hz;
    let lo = lag.floor() as usize;
    if lo == 0 || lo + 1 >= frame.len() {
        return None;
    }
    let mean = frame.iter().sum::<f64>() / frame.len() as f64;
    let x: Vec<f64> = frame.iter().map(|v| v - mean).collect();
    let frac = lag - lo as f64;
    let r_lo = normalized_autocorrelation(&x, lo);
    let r = if frac == 0.0 {
        r_lo
    } else {
        (1.0 - frac) * r_lo + frac * normalized_autocorrelation(&x, lo + 1)
    };
    Some(hnr_from_correlation(r))
}

/// Reusable alpha-ratio analyser; keeps its FFT plan between frames.
pub struct AlphaRatio {
    planner: FftPlanner<f64>,
    sample_rate: u32,
}

impl AlphaRatio {
    pub fn new(sample_rate: u32) -> Result<Self, SignalError> {
        if sample_rate < 10_000 {
            return Err(SignalError::SampleRateTooLow {
                sample_rate,
                required: 10_000.0,
            });
        }
        Ok(AlphaRatio {
            planner: FftPlanner::new(),
            sample_rate,
        })
    }

    /// `10 log10(E[1-5 kHz] / E[50-1000 Hz])` from the Hann-windowed power
    /// spectrum. Each band energy is floored at machine epsilon.
    pub fn compute(&mut self, frame: &[f64]) -> f64 {
        let n = frame.len();
        if n < 2 {
            return 0.0;
        }
        let fft = self.planner.plan_fft_forward(n);
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .enumerate()
            .map(|(i, &x)| Complex::new(x * hann(i, n), 0.0))
            .collect();
        fft.process(&mut buf);
        let bin_hz = self.sample_rate as f64 / n as f64;
        let (mut low, mut high) = (0.0, 0.0);
        for (k, c) in buf.iter().take(n / 2 + 1).enumerate() {
            let f = k as f64 * bin_hz;
            let p = c.norm_sqr();
            if f >= LOW_BAND.0 && f < LOW_BAND.1 {
                low += p;
            } else if f >= HIGH_BAND.0 && f <= HIGH_BAND.1 {
                high += p;
            }
        }
        10.0 * (high.max(f64::EPSILON) / low.max(f64::EPSILON)).log10()
    }
}

pub(crate) fn hann(i: usize, n: usize) -> f64 {
    0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()
}

/// Alpha ratio of a single frame in dB. See [`AlphaRatio::compute`].
pub fn alpha_ratio(frame: &[f64], sample_rate: u32) -> Result<f64, SignalError> {
    Ok(AlphaRatio::new(sample_rate)?.compute(frame))
}
