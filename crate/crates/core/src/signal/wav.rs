use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{AudioBuffer, SignalError};

/// Reads a PCM (8/16/24/32-bit integer) or 32-bit float WAV file, downmixing
/// to mono by averaging channels. Integer samples are scaled by `2^(bits-1)`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, SignalError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| SignalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let format_err = |e: hound::Error| SignalError::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let reader = WavReader::new(std::io::BufReader::new(file)).map_err(format_err)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(SignalError::Format {
            path: path.to_path_buf(),
            reason: "zero channels".into(),
        });
    }

    let interleaved: Vec<f64> = match spec.sample_format {
        SampleFormat::Float => {
            if spec.bits_per_sample != 32 {
                return Err(SignalError::Format {
                    path: path.to_path_buf(),
                    reason: format!("unsupported float width {}", spec.bits_per_sample),
                });
            }
            reader
                .into_samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<Result<_, _>>()
                .map_err(format_err)?
        }
        SampleFormat::Int => {
            let bits = spec.bits_per_sample;
            if !matches!(bits, 8 | 16 | 24 | 32) {
                return Err(SignalError::Format {
                    path: path.to_path_buf(),
                    reason: format!("unsupported integer width {bits}"),
                });
            }
            let scale = (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<_, _>>()
                .map_err(format_err)?
        }
    };

    let samples: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    if samples.is_empty() {
        return Err(SignalError::EmptyAudio(path.to_path_buf()));
    }
    Ok(AudioBuffer::new(samples, spec.sample_rate))
}

/// Writes mono 16-bit PCM, clipping to `[-1, 1]`.
pub fn write_wav(path: impl AsRef<Path>, audio: &AudioBuffer) -> Result<(), SignalError> {
    let path = path.as_ref();
    let spec = WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let wrap = |e: hound::Error| match e {
        hound::Error::IoError(source) => SignalError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => SignalError::Format {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    };
    let mut writer = WavWriter::create(path, spec).map_err(wrap)?;
    for &s in &audio.samples {
        let v = (s.clamp(-1.0, 1.0) * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(wrap)?;
    }
    writer.finalize().map_err(wrap)
}
