use super::{F0Track, FrameTrack, SegmentKind, SignalError, VoicedSegment};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SegmentConfig {
    /// Frames quieter than this are pause candidates.
    pub pause_db: f64,
    /// Minimum length of a quiet run to count as a pause, in seconds.
    pub min_pause: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            pause_db: -50.0,
            min_pause: 0.150,
        }
    }
}

/// Splits `[0, duration]` into voiced, unvoiced and pause segments.
///
/// A pause is a run of frames below `pause_db` lasting at least `min_pause`;
/// every other frame is voiced or unvoiced according to `f0`. Segment
/// boundaries lie halfway between the centres of adjacent frames, and the
/// first and last segments are stretched to 0 and `duration`.
pub fn segment_voicing(
    f0: &F0Track,
    loudness: &FrameTrack,
    duration: f64,
    config: &SegmentConfig,
) -> Result<Vec<VoicedSegment>, SignalError> {
    if f0.len() != loudness.len() {
        return Err(SignalError::TrackMismatch(f0.len(), loudness.len()));
    }
    let n = f0.len();
    if duration <= 0.0 {
        return Ok(Vec::new());
    }
    if n == 0 {
        return Ok(vec![VoicedSegment {
            start: 0.0,
            end: duration,
            kind: SegmentKind::Unvoiced,
        }]);
    }

    let mut kinds: Vec<SegmentKind> = (0..n)
        .map(|t| {
            if f0.is_voiced(t) {
                SegmentKind::Voiced
            } else {
                SegmentKind::Unvoiced
            }
        })
        .collect();

    let quiet: Vec<bool> = loudness.values.iter().map(|&l| l < config.pause_db).collect();
    let mut t = 0;
    while t < n {
        if !quiet[t] {
            t += 1;
            continue;
        }
        let start = t;
        while t < n && quiet[t] {
            t += 1;
        }
        if (t - start) as f64 * loudness.hop >= config.min_pause - 1e-9 {
            kinds[start..t].iter_mut().for_each(|k| *k = SegmentKind::Pause);
        }
    }

    let boundary = |t: usize| -> f64 {
        if t == 0 {
            0.0
        } else if t >= n {
            duration
        } else {
            (loudness.time_of(t) + 0.5 * (loudness.frame_len - loudness.hop)).clamp(0.0, duration)
        }
    };

    let mut segments: Vec<VoicedSegment> = Vec::new();
    let mut start = 0;
    for t in 1..=n {
        if t == n || kinds[t] != kinds[start] {
            let (a, b) = (boundary(start), boundary(t));
            if b > a {
                match segments.last_mut() {
                    Some(last) if last.kind == kinds[start] => last.end = b,
                    _ => segments.push(VoicedSegment {
                        start: a,
                        end: b,
                        kind: kinds[start],
                    }),
                }
            }
            start = t;
        }
    }
    // Any gap left by a dropped zero-length segment is absorbed by its predecessor.
    for i in 1..segments.len() {
        segments[i - 1].end = segments[i].start;
    }
    Ok(segments)
}
