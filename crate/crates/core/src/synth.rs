//! Seeded synthetic signals and datasets for examples, tests and smoke runs.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::category::{Category, NUM_CATEGORIES};
use crate::ensemble::ProbMatrix;
use crate::features::FeatureBundle;
use crate::neural::{Target, TrainExample};
use crate::signal::AudioBuffer;
use crate::tensor::Tensor;

pub fn sine(freq: f64, duration: f64, sample_rate: u32, amplitude: f64) -> AudioBuffer {
    let n = (duration * sample_rate as f64).round() as usize;
    let w = 2.0 * std::f64::consts::PI * freq / sample_rate as f64;
    AudioBuffer::new((0..n).map(|i| amplitude * (w * i as f64).sin()).collect(), sample_rate)
}

/// Uniform white noise in `[-amplitude, amplitude]`.
pub fn white_noise(duration: f64, sample_rate: u32, amplitude: f64, seed: u64) -> AudioBuffer {
    let n = (duration * sample_rate as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AudioBuffer::new(
        (0..n).map(|_| amplitude * rng.gen_range(-1.0..=1.0)).collect(),
        sample_rate,
    )
}

pub fn silence(duration: f64, sample_rate: u32) -> AudioBuffer {
    let n = (duration * sample_rate as f64).round() as usize;
    AudioBuffer::new(vec![0.0; n], sample_rate)
}

/// Unit impulses starting at sample 0, spaced by the `spacings` pattern
/// (seconds, cycled). Each spacing is rounded to whole samples.
pub fn impulse_train(spacings: &[f64], duration: f64, sample_rate: u32, amplitude: f64) -> AudioBuffer {
    let n = (duration * sample_rate as f64).round() as usize;
    let mut samples = vec![0.0; n];
    let steps: Vec<usize> = spacings
        .iter()
        .map(|s| (s * sample_rate as f64).round() as usize)
        .collect();
    let mut pos = 0;
    let mut k = 0;
    while pos < n {
        samples[pos] = amplitude;
        pos += steps[k % steps.len()];
        k += 1;
    }
    AudioBuffer::new(samples, sample_rate)
}

/// Concatenates buffers sharing one sample rate.
pub fn concat(parts: &[AudioBuffer]) -> AudioBuffer {
    let sr = parts.first().map_or(16000, |p| p.sample_rate);
    let mut samples = Vec::new();
    for p in parts {
        assert_eq!(p.sample_rate, sr, "sample rates differ");
        samples.extend_from_slice(&p.samples);
    }
    AudioBuffer::new(samples, sr)
}

/// A vowel-like voiced signal: harmonics of a slowly gliding f0 with a mild
/// amplitude envelope.
pub fn voiced(f0_start: f64, f0_end: f64, duration: f64, sample_rate: u32, amplitude: f64) -> AudioBuffer {
    let n = (duration * sample_rate as f64).round() as usize;
    let sr = sample_rate as f64;
    let mut phase = 0.0;
    let samples = (0..n)
        .map(|i| {
            let u = i as f64 / n.max(1) as f64;
            let f = f0_start + (f0_end - f0_start) * u;
            phase += 2.0 * std::f64::consts::PI * f / sr;
            let env = 0.8 + 0.2 * (std::f64::consts::PI * u).sin();
            let s = phase.sin() + 0.5 * (2.0 * phase).sin() + 0.25 * (3.0 * phase).sin();
            amplitude * env * s / 1.75
        })
        .collect();
    AudioBuffer::new(samples, sample_rate)
}

/// Dimensions of the synthetic multi-level dataset.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub samples_per_class: usize,
    pub word_dim: usize,
    pub utterance_dim: usize,
    /// Embedding sources as `(name, dim)`.
    pub sources: Vec<(String, usize)>,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            samples_per_class: 8,
            word_dim: 42,
            utterance_dim: 12,
            sources: vec![("audio".into(), 24), ("text".into(), 16)],
            noise: 0.3,
            seed: 1,
        }
    }
}

/// Class-separable 8-way dataset: every level carries a class-specific
/// prototype plus Gaussian-ish noise, so each branch alone is informative.
pub fn separable_dataset(spec: &SyntheticSpec) -> Vec<TrainExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let proto = |dim: usize, rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..NUM_CATEGORIES)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect()
    };
    let word_proto = proto(spec.word_dim, &mut rng);
    let utt_proto = proto(spec.utterance_dim, &mut rng);
    let src_proto: Vec<Vec<Vec<f64>>> = spec.sources.iter().map(|(_, d)| proto(*d, &mut rng)).collect();

    let noisy = |base: &[f64], rng: &mut ChaCha8Rng, noise: f64| -> Vec<f64> {
        base.iter()
            .map(|b| b + noise * (rng.gen_range(-1.0..1.0) + rng.gen_range(-1.0..1.0)))
            .collect()
    };

    let mut out = Vec::new();
    for _ in 0..spec.samples_per_class {
        for cat in Category::ALL {
            let c = cat.index();
            let n_words = rng.gen_range(2..=5);
            let rows: Vec<Vec<f64>> = (0..n_words)
                .map(|_| noisy(&word_proto[c], &mut rng, spec.noise))
                .collect();
            let word_seq = Tensor::from_rows(&rows, spec.word_dim);
            let utterance = noisy(&utt_proto[c], &mut rng, spec.noise);
            let mut embeddings = BTreeMap::new();
            for (s, (name, dim)) in spec.sources.iter().enumerate() {
                let frames = rng.gen_range(2..=4);
                let rows: Vec<Vec<f64>> = (0..frames)
                    .map(|_| noisy(&src_proto[s][c], &mut rng, spec.noise))
                    .collect();
                embeddings.insert(name.clone(), Tensor::from_rows(&rows, *dim));
            }
            out.push(TrainExample {
                bundle: FeatureBundle {
                    word_seq,
                    utterance,
                    embeddings,
                },
                target: Target::Class(cat),
            });
        }
    }
    out
}

/// Balanced evaluation scenario for comparing ensembles: `per_class` samples
/// of every category and `calibrations.len()` models. Each model sees a
/// noisy class signal; model `i`'s column `c` is then raised to the power
/// `calibrations[i][c]` (a monotone transform, exponents < 1 inflate that
/// column) before the rows are renormalised.
pub fn ensemble_scenario(
    per_class: usize,
    signal: f64,
    calibrations: &[[f64; NUM_CATEGORIES]],
    seed: u64,
) -> (Vec<Category>, Vec<ProbMatrix>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let golds: Vec<Category> = (0..per_class).flat_map(|_| Category::ALL).collect();
    let models = calibrations
        .iter()
        .enumerate()
        .map(|(i, cal)| {
            let rows: Vec<[f64; NUM_CATEGORIES]> = golds
                .iter()
                .map(|g| {
                    let mut logits = [0.0; NUM_CATEGORIES];
                    for (c, l) in logits.iter_mut().enumerate() {
                        let z: f64 = (0..4).map(|_| rng.gen_range(-1.0..1.0)).sum::<f64>() * 0.866;
                        *l = z + if c == g.index() { signal } else { 0.0 };
                    }
                    let p = crate::tensor::softmax(&logits);
                    let mut row = [0.0; NUM_CATEGORIES];
                    for c in 0..NUM_CATEGORIES {
                        row[c] = p[c].powf(cal[c]);
                    }
                    let s: f64 = row.iter().sum();
                    row.iter_mut().for_each(|v| *v /= s);
                    row
                })
                .collect();
            ProbMatrix::new(format!("model{}", i + 1), rows).expect("rows are normalised")
        })
        .collect();
    (golds, models)
}
