use super::{loudness, AudioBuffer, FrameTrack, SignalError};

/// Analysis window geometry in seconds.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct FrameSpec {
    pub frame_len: f64,
    pub hop: f64,
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec {
            frame_len: 0.025,
            hop: 0.010,
        }
    }
}

impl FrameSpec {
    /// Frame and hop lengths in samples at `sample_rate`.
    pub fn in_samples(&self, sample_rate: u32) -> Result<(usize, usize), SignalError> {
        let invalid = SignalError::InvalidFrame {
            frame_len: self.frame_len,
            hop: self.hop,
        };
        if !(self.hop > 0.0 && self.frame_len >= self.hop) {
            return Err(invalid);
        }
        let sr = sample_rate as f64;
        let frame = (self.frame_len * sr).round() as usize;
        let hop = (self.hop * sr).round() as usize;
        if hop == 0 || frame < hop {
            return Err(invalid);
        }
        Ok((frame, hop))
    }
}

/// `floor((len - frame) / hop) + 1`, or 0 when the signal is shorter than a frame.
pub fn frame_count(len: usize, frame: usize, hop: usize) -> usize {
    if len < frame {
        0
    } else {
        (len - frame) / hop + 1
    }
}

/// Splits the signal into full frames; a trailing partial window is dropped.
pub fn frame_signal(audio: &AudioBuffer, spec: FrameSpec) -> Result<Vec<&[f64]>, SignalError> {
    let (frame, hop) = spec.in_samples(audio.sample_rate)?;
    let n = frame_count(audio.len(), frame, hop);
    if n == 0 {
        return Err(SignalError::TooShort {
            samples: audio.len(),
            frame_len: frame,
        });
    }
    Ok((0..n).map(|t| &audio.samples[t * hop..t * hop + frame]).collect())
}

/// RMS level in dB for every frame.
pub fn loudness_track(audio: &AudioBuffer, spec: FrameSpec) -> Result<FrameTrack, SignalError> {
    let frames = frame_signal(audio, spec)?;
    Ok(FrameTrack {
        values: frames.iter().map(|f| loudness(f)).collect(),
        frame_len: spec.frame_len,
        hop: spec.hop,
        start_offset: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_second_at_16k_gives_98_frames() {
        let audio = AudioBuffer::new(vec![0.0; 16000], 16000);
        let frames = frame_signal(&audio, FrameSpec::default()).unwrap();
        assert_eq!(frames.len(), (16000 - 400) / 160 + 1);
        assert_eq!(frames.len(), 98);
        assert!(frames.iter().all(|f| f.len() == 400));
    }

    #[test]
    fn exactly_one_frame() {
        let audio = AudioBuffer::new(vec![0.0; 400], 16000);
        assert_eq!(frame_signal(&audio, FrameSpec::default()).unwrap().len(), 1);
    }

    #[test]
    fn hop_equal_to_frame_tiles_without_overlap() {
        let audio = AudioBuffer::new((0..1000).map(|i| i as f64).collect(), 1000);
        let spec = FrameSpec {
            frame_len: 0.1,
            hop: 0.1,
        };
        let frames = frame_signal(&audio, spec).unwrap();
        assert_eq!(frames.len(), 10);
        let joined: Vec<f64> = frames.concat();
        assert_eq!(joined, audio.samples);
    }

    #[test]
    fn too_short_and_invalid() {
        let audio = AudioBuffer::new(vec![0.0; 399], 16000);
        assert!(matches!(
            frame_signal(&audio, FrameSpec::default()),
            Err(SignalError::TooShort { .. })
        ));
        let bad = FrameSpec {
            frame_len: 0.01,
            hop: 0.02,
        };
        assert!(frame_signal(&audio, bad).is_err());
    }
}
