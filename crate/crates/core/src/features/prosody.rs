//! Word-level prosody (22 slots) and utterance-level rhythm (34 slots).

use super::stats::{max, mean, quantile, range, semitones, slope, std};
use super::{FeatureConfig, FeatureError, WordAlignment};
use crate::signal::{
    estimate_f0, extract_periods, frame_signal, hnr, jitter_local, shimmer_local, AlphaRatio, AudioBuffer, F0Track,
    FrameTrack, Periods, SegmentKind, SignalError, VoicedSegment,
};

pub const PROSODY_DIM: usize = 22;
pub const RHYTHM_DIM: usize = 34;

/// Names of the word-prosody slots, in order.
pub const PROSODY_LAYOUT: [&str; PROSODY_DIM] = [
    "loudness_mean_db",
    "loudness_std_db",
    "loudness_max_db",
    "loudness_slope_db_per_s",
    "jitter_local",
    "jitter_ppq5",
    "shimmer_local",
    "shimmer_db",
    "alpha_ratio_mean_db",
    "hnr_mean_db",
    "hnr_std_db",
    "f0_mean_st",
    "f0_std_st",
    "f0_range_st",
    "f0_slope_st_per_s",
    "voiced_fraction",
    "voiced_segment_count",
    "voiced_segment_mean_s",
    "unvoiced_segment_mean_s",
    "word_duration_s",
    "pre_pause_s",
    "post_pause_s",
];

/// Names of the utterance-rhythm slots, in order.
pub const RHYTHM_LAYOUT: [&str; RHYTHM_DIM] = [
    "loudness_mean_db",
    "loudness_std_db",
    "loudness_max_db",
    "loudness_range_db",
    "loudness_slope_db_per_s",
    "jitter_mean",
    "jitter_std",
    "shimmer_mean",
    "shimmer_std",
    "hnr_mean_db",
    "hnr_std_db",
    "f0_mean_st",
    "f0_std_st",
    "f0_range_st",
    "f0_slope_st_per_s",
    "f0_q20_st",
    "f0_q50_st",
    "f0_q80_st",
    "voiced_fraction",
    "voiced_segment_count",
    "voiced_segment_rate_per_s",
    "voiced_segment_mean_s",
    "voiced_segment_std_s",
    "unvoiced_segment_count",
    "unvoiced_segment_mean_s",
    "unvoiced_segment_std_s",
    "pause_count",
    "pause_rate_per_s",
    "pause_mean_s",
    "pause_std_s",
    "pause_fraction",
    "speech_rate_words_per_s",
    "articulation_rate_words_per_s",
    "duration_s",
];

/// Frame-level analysis of one stretch of audio.
struct Analysis {
    times: Vec<f64>,
    loudness: Vec<f64>,
    alpha: Vec<f64>,
    hnr: Vec<f64>,
    f0: F0Track,
    periods: Periods,
    segments: Vec<VoicedSegment>,
}

impl Analysis {
    fn run(audio: &AudioBuffer, config: &FeatureConfig) -> Result<Self, SignalError> {
        let spec = config.pitch.frame;
        let frames = frame_signal(audio, spec)?;
        let f0 = estimate_f0(audio, &config.pitch)?;
        if f0.len() != frames.len() {
            return Err(SignalError::TrackMismatch(f0.len(), frames.len()));
        }
        let loudness_track = FrameTrack {
            values: frames.iter().map(|f| crate::signal::loudness(f)).collect(),
            frame_len: spec.frame_len,
            hop: spec.hop,
            start_offset: 0.0,
        };
        let mut alpha_ratio = AlphaRatio::new(audio.sample_rate)?;
        let alpha = frames.iter().map(|f| alpha_ratio.compute(f)).collect();
        let hnr = frames
            .iter()
            .zip(&f0.f0_hz)
            .filter(|(_, &f)| f > 0.0)
            .filter_map(|(frame, &f)| hnr(frame, f, audio.sample_rate))
            .collect();
        let periods = extract_periods(audio, &f0);
        let segments = crate::signal::segment_voicing(&f0, &loudness_track, audio.duration(), &config.segments)?;
        let times = (0..frames.len())
            .map(|t| t as f64 * spec.hop + spec.frame_len / 2.0)
            .collect();
        Ok(Analysis {
            times,
            loudness: loudness_track.values,
            alpha,
            hnr,
            f0,
            periods,
            segments,
        })
    }

    /// Voiced-frame times and F0 in semitones.
    fn pitch_st(&self) -> (Vec<f64>, Vec<f64>) {
        self.f0
            .f0_hz
            .iter()
            .zip(&self.times)
            .filter(|(&f, _)| f > 0.0)
            .map(|(&f, &t)| (t, semitones(f)))
            .unzip()
    }

    fn durations(&self, kind: SegmentKind) -> Vec<f64> {
        self.segments
            .iter()
            .filter(|s| s.kind == kind)
            .map(VoicedSegment::duration)
            .collect()
    }

    /// Per-voiced-region jitter and shimmer for regions with at least two cycles.
    fn per_region(&self) -> (Vec<f64>, Vec<f64>) {
        self.periods
            .regions
            .iter()
            .filter(|r| r.len() >= 2)
            .map(|r| {
                (
                    jitter_local(&self.periods.periods[r.clone()]),
                    shimmer_local(&self.periods.amplitudes[r.clone()]),
                )
            })
            .unzip()
    }
}

/// Prosodic descriptors of word `index`, computed on that word's own audio
/// so that shifting a whole utterance leaves them unchanged. Pauses are the
/// gaps to the neighbouring alignments (0 at the utterance edges).
#[derive(Debug, Clone, PartialEq)]
pub struct WordProsody {
    pub values: [f64; PROSODY_DIM],
    /// Set when the span is shorter than one analysis frame; `values` is then
    /// all zero.
    pub too_short: bool,
}

pub fn word_prosody(
    audio: &AudioBuffer,
    alignments: &[WordAlignment],
    index: usize,
    config: &FeatureConfig,
) -> Result<WordProsody, FeatureError> {
    let span = &alignments[index];
    let duration = audio.duration();
    if span.start < 0.0 || span.end > duration + 0.5 / audio.sample_rate as f64 || span.end <= span.start {
        return Err(FeatureError::SpanOutside {
            start: span.start,
            end: span.end,
            duration,
        });
    }
    let slice = audio.slice_time(span.start, span.end);
    let a = match Analysis::run(&slice, config) {
        Ok(a) => a,
        Err(SignalError::TooShort { .. }) => {
            return Ok(WordProsody {
                values: [0.0; PROSODY_DIM],
                too_short: true,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let (pt, st) = a.pitch_st();
    let pre = if index == 0 {
        0.0
    } else {
        (span.start - alignments[index - 1].end).max(0.0)
    };
    let post = alignments
        .get(index + 1)
        .map_or(0.0, |next| (next.start - span.end).max(0.0));
    let values = [
        mean(&a.loudness),
        std(&a.loudness),
        max(&a.loudness),
        slope(&a.times, &a.loudness),
        a.periods.jitter_local(),
        a.periods.jitter_ppq5(),
        a.periods.shimmer_local(),
        a.periods.shimmer_db(),
        mean(&a.alpha),
        mean(&a.hnr),
        std(&a.hnr),
        mean(&st),
        std(&st),
        range(&st),
        slope(&pt, &st),
        a.f0.voiced_fraction(),
        a.durations(SegmentKind::Voiced).len() as f64,
        mean(&a.durations(SegmentKind::Voiced)),
        mean(&a.durations(SegmentKind::Unvoiced)),
        span.end - span.start,
        pre,
        post,
    ];
    debug_assert!(values.iter().all(|v| v.is_finite()));
    Ok(WordProsody {
        values,
        too_short: false,
    })
}

/// Rhythm and voice-quality summary of a whole utterance.
pub fn utterance_rhythm(
    audio: &AudioBuffer,
    alignments: &[WordAlignment],
    config: &FeatureConfig,
) -> Result<[f64; RHYTHM_DIM], FeatureError> {
    if audio.is_empty() {
        return Err(SignalError::EmptyAudio("<buffer>".into()).into());
    }
    let a = Analysis::run(audio, config)?;
    let duration = audio.duration();
    let (pt, st) = a.pitch_st();
    let (jit, shim) = a.per_region();
    let voiced = a.durations(SegmentKind::Voiced);
    let unvoiced = a.durations(SegmentKind::Unvoiced);
    let pauses = a.durations(SegmentKind::Pause);
    let pause_total: f64 = pauses.iter().sum();
    let words = alignments.len() as f64;
    let speaking = duration - pause_total;
    let values = [
        mean(&a.loudness),
        std(&a.loudness),
        max(&a.loudness),
        range(&a.loudness),
        slope(&a.times, &a.loudness),
        mean(&jit),
        std(&jit),
        mean(&shim),
        std(&shim),
        mean(&a.hnr),
        std(&a.hnr),
        mean(&st),
        std(&st),
        range(&st),
        slope(&pt, &st),
        quantile(&st, 0.2),
        quantile(&st, 0.5),
        quantile(&st, 0.8),
        a.f0.voiced_fraction(),
        voiced.len() as f64,
        voiced.len() as f64 / duration,
        mean(&voiced),
        std(&voiced),
        unvoiced.len() as f64,
        mean(&unvoiced),
        std(&unvoiced),
        pauses.len() as f64,
        pauses.len() as f64 / duration,
        mean(&pauses),
        std(&pauses),
        pause_total / duration,
        words / duration,
        if speaking > 0.0 { words / speaking } else { 0.0 },
        duration,
    ];
    debug_assert!(values.iter().all(|v| v.is_finite()));
    Ok(values)
}
