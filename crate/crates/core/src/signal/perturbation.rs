//! Glottal-cycle extraction and cycle-to-cycle perturbation measures
//! (jitter and shimmer).

use std::ops::Range;

use super::{AudioBuffer, F0Track};

/// Cycle lengths (seconds) and peak amplitudes, one amplitude per cycle.
/// `regions` partitions the lists by voiced region; cycle-to-cycle
/// differences are never taken across a region boundary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Periods {
    pub periods: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub regions: Vec<Range<usize>>,
}

impl Periods {
    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    /// Local jitter with differences pooled over regions.
    pub fn jitter_local(&self) -> f64 {
        pooled_ratio(&self.periods, &self.regions, |a, b| (a - b).abs())
    }

    /// Local shimmer with differences pooled over regions.
    pub fn shimmer_local(&self) -> f64 {
        pooled_ratio(&self.amplitudes, &self.regions, |a, b| (a - b).abs())
    }

    pub fn shimmer_db(&self) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for r in &self.regions {
            for w in self.amplitudes[r.clone()].windows(2) {
                if let Some(d) = db_step(w[0], w[1]) {
                    sum += d;
                    n += 1;
                }
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    pub fn jitter_ppq5(&self) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for r in &self.regions {
            let (s, c) = ppq5_terms(&self.periods[r.clone()]);
            sum += s;
            n += c;
        }
        let mean = mean(&self.periods);
        if n == 0 || mean <= 0.0 {
            0.0
        } else {
            sum / n as f64 / mean
        }
    }
}

fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

fn pooled_ratio(values: &[f64], regions: &[Range<usize>], diff: impl Fn(f64, f64) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for r in regions {
        for w in values[r.clone()].windows(2) {
            sum += diff(w[1], w[0]);
            n += 1;
        }
    }
    let m = mean(values);
    if n == 0 || m <= 0.0 {
        0.0
    } else {
        sum / n as f64 / m
    }
}

/// `mean |T_i - T_{i-1}| / mean T_i`; 0 for fewer than two periods.
pub fn jitter_local(periods: &[f64]) -> f64 {
    pooled_ratio(periods, &[0..periods.len()], |a, b| (a - b).abs())
}

/// Five-point period perturbation quotient; 0 for fewer than five periods.
pub fn jitter_ppq5(periods: &[f64]) -> f64 {
    let (sum, n) = ppq5_terms(periods);
    let m = mean(periods);
    if n == 0 || m <= 0.0 {
        0.0
    } else {
        sum / n as f64 / m
    }
}

fn ppq5_terms(periods: &[f64]) -> (f64, usize) {
    if periods.len() < 5 {
        return (0.0, 0);
    }
    let sum = periods
        .windows(5)
        .map(|w| (w[2] - w.iter().sum::<f64>() / 5.0).abs())
        .sum();
    (sum, periods.len() - 4)
}

/// `mean |A_i - A_{i-1}| / mean A_i`; 0 for fewer than two amplitudes.
pub fn shimmer_local(amplitudes: &[f64]) -> f64 {
    jitter_local(amplitudes)
}

fn db_step(a: f64, b: f64) -> Option<f64> {
    (a > 0.0 && b > 0.0).then(|| (20.0 * (b / a).log10()).abs())
}

/// `mean |20 log10(A_i / A_{i-1})|` in dB over pairs of positive amplitudes.
pub fn shimmer_db(amplitudes: &[f64]) -> f64 {
    let steps: Vec<f64> = amplitudes.windows(2).filter_map(|w| db_step(w[0], w[1])).collect();
    mean(&steps)
}

/// Locates glottal-cycle peaks inside every voiced region of `f0`.
///
/// The first peak of a region is the maximum over one predicted period; each
/// following peak is the maximum within `[0.7, 1.3]` of the local predicted
/// period after the previous one. Peak positions and heights are refined by
/// parabolic interpolation.
pub fn extract_periods(audio: &AudioBuffer, f0: &F0Track) -> Periods {
    let sr = audio.sample_rate as f64;
    let frame = (f0.frame_len * sr).round() as usize;
    let hop = ((f0.hop * sr).round() as usize).max(1);
    let x = &audio.samples;
    let mut out = Periods::default();

    for run in f0.voiced_runs() {
        let span_start = run.start * hop;
        let span_end = ((run.end - 1) * hop + frame).min(x.len());
        let period_at = |pos: f64| {
            let t = ((pos - frame as f64 / 2.0) / hop as f64).round();
            let t = (t.max(run.start as f64) as usize).min(run.end - 1);
            sr / f0.f0_hz[t]
        };

        let first_len = period_at(span_start as f64).ceil() as usize;
        if span_start + first_len >= span_end {
            continue;
        }
        let Some(mut prev) = peak_in(x, span_start, span_start + first_len) else {
            continue;
        };
        let region_begin = out.periods.len();
        loop {
            let expected = period_at(prev.0);
            let lo = (prev.0 + 0.7 * expected).ceil() as usize;
            let hi = ((prev.0 + 1.3 * expected).floor() as usize).min(span_end - 1);
            if lo > hi || lo >= span_end {
                break;
            }
            let Some(next) = peak_in(x, lo, hi + 1) else {
                break;
            };
            out.periods.push((next.0 - prev.0) / sr);
            out.amplitudes.push(next.1);
            prev = next;
        }
        if out.periods.len() > region_begin {
            out.regions.push(region_begin..out.periods.len());
        }
    }
    out
}

/// Highest positive sample in `[lo, hi)`, refined by a parabola through its
/// neighbours. Returns `(position, amplitude)`.
fn peak_in(x: &[f64], lo: usize, hi: usize) -> Option<(f64, f64)> {
    let hi = hi.min(x.len());
    if lo >= hi {
        return None;
    }
    let mut q = lo;
    for i in lo..hi {
        if x[i] > x[q] {
            q = i;
        }
    }
    let b = x[q];
    if b <= 0.0 {
        return None;
    }
    if q == 0 || q + 1 >= x.len() {
        return Some((q as f64, b));
    }
    let (a, c) = (x[q - 1], x[q + 1]);
    let curvature = a - 2.0 * b + c;
    if curvature >= 0.0 {
        return Some((q as f64, b));
    }
    let delta = (0.5 * (a - c) / curvature).clamp(-0.5, 0.5);
    Some((q as f64 + delta, (b - 0.25 * (a - c) * delta).max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{estimate_f0, PitchConfig};
    use crate::synth;

    fn constant_track(n: usize, f0: f64) -> F0Track {
        F0Track {
            f0_hz: vec![f0; n],
            voicing: vec![1.0; n],
            hop: 0.01,
            frame_len: 0.025,
            threshold: 0.45,
        }
    }

    #[test]
    fn jitter_hand_values() {
        assert_eq!(jitter_local(&[0.005; 10]), 0.0);
        let j = jitter_local(&[0.005, 0.0055, 0.005, 0.0055]);
        assert!((j - 0.5 / 5.25).abs() < 1e-12);
        assert!((j - 0.09524).abs() < 1e-5);
        assert_eq!(jitter_local(&[0.005]), 0.0);
        assert_eq!(jitter_local(&[]), 0.0);
    }

    #[test]
    fn shimmer_hand_values() {
        assert_eq!(shimmer_local(&[0.3; 6]), 0.0);
        assert!((shimmer_local(&[1.0, 2.0, 1.0, 2.0]) - 1.0 / 1.5).abs() < 1e-12);
        let db = shimmer_db(&[1.0, 2.0, 1.0]);
        assert!((db - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!((db - 6.0206).abs() < 1e-4);
        assert_eq!(shimmer_db(&[1.0]), 0.0);
    }

    #[test]
    fn ppq5_of_constant_and_alternating_periods() {
        assert_eq!(jitter_ppq5(&[1.0; 8]), 0.0);
        assert_eq!(jitter_ppq5(&[1.0, 2.0, 3.0]), 0.0);
        // Alternating a,b: each centre deviates from its 5-point mean by 2|a-b|/5.
        let p = [1.0, 2.0, 1.0, 2.0, 1.0, 2.0];
        let expected = 0.4 / 1.5;
        assert!((jitter_ppq5(&p) - expected).abs() < 1e-12);
    }

    #[test]
    fn constant_impulse_train_gives_constant_periods() {
        let audio = synth::impulse_train(&[0.005], 0.5, 16000, 0.8);
        let track = estimate_f0(&audio, &PitchConfig::default()).unwrap();
        let p = extract_periods(&audio, &track);
        assert!(p.len() > 50, "only {} periods", p.len());
        for &t in &p.periods {
            assert!((t - 0.005).abs() <= 1.0 / 16000.0 + 1e-12);
        }
        assert_eq!(p.jitter_local(), 0.0);
        assert_eq!(p.shimmer_local(), 0.0);
        assert_eq!(p.periods.len(), p.amplitudes.len());
    }

    #[test]
    fn alternating_spacing_is_recovered() {
        let audio = synth::impulse_train(&[0.005, 0.0055], 0.5, 16000, 0.8);
        let n = crate::signal::frame_count(audio.len(), 400, 160);
        let track = constant_track(n, 1.0 / 0.00525);
        let p = extract_periods(&audio, &track);
        assert!(p.len() > 40);
        for w in p.periods.windows(2) {
            let pair = [w[0], w[1]];
            let ok = |a: f64, b: f64| {
                (a - 0.005).abs() < 1e-9 && (b - 0.0055).abs() < 1e-9
            };
            assert!(ok(pair[0], pair[1]) || ok(pair[1], pair[0]), "{pair:?}");
        }
    }

    #[test]
    fn unvoiced_input_gives_no_periods() {
        let audio = AudioBuffer::new(vec![0.0; 8000], 16000);
        let track = estimate_f0(&audio, &PitchConfig::default()).unwrap();
        let p = extract_periods(&audio, &track);
        assert!(p.is_empty());
        assert!(p.amplitudes.is_empty());
        assert_eq!(p.jitter_local(), 0.0);
    }
}
