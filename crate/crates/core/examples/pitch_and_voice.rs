//! Pitch tracking and voice-quality descriptors on synthetic signals.
//!
//! cargo run --example pitch_and_voice

use mater::signal::{
    alpha_ratio, estimate_f0, extract_periods, hnr, loudness_track, segment_voicing, FrameSpec, PitchConfig, SegmentConfig,
};
use mater::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sr = 16000;
    let config = PitchConfig::default();

    println!("pure tones");
    for f in [80.0, 150.0, 220.0, 400.0] {
        let track = estimate_f0(&synth::sine(f, 0.5, sr, 0.5), &config)?;
        let voiced: Vec<f64> = track.f0_hz.iter().cloned().filter(|&v| v > 0.0).collect();
        let mean = voiced.iter().sum::<f64>() / voiced.len() as f64;
        println!("  {f:5.1} Hz -> mean F0 {mean:7.3} Hz, voiced {:.0}%", 100.0 * track.voiced_fraction());
    }

    println!("glottal-like glide 120 -> 180 Hz");
    let glide = synth::voiced(120.0, 180.0, 0.6, sr, 0.5);
    let track = estimate_f0(&glide, &config)?;
    for t in (0..track.len()).step_by(10) {
        println!("  t={:.2}s  f0={:6.1}  voicing={:.2}", t as f64 * track.hop, track.f0_hz[t], track.voicing[t]);
    }

    println!("perturbation");
    let steady = synth::impulse_train(&[0.005], 0.5, sr, 0.8);
    let p = extract_periods(&steady, &estimate_f0(&steady, &config)?);
    println!("  steady 200 Hz pulses: {} periods, jitter {:.4}, shimmer {:.4}", p.len(), p.jitter_local(), p.shimmer_local());
    let p = extract_periods(&glide, &track);
    println!(
        "  glide: jitter {:.4}, ppq5 {:.4}, shimmer {:.4} ({:.3} dB)",
        p.jitter_local(),
        p.jitter_ppq5(),
        p.shimmer_local(),
        p.shimmer_db()
    );

    println!("voiced / unvoiced / pause segmentation");
    let utterance = synth::concat(&[glide.clone(), synth::silence(0.3, sr), synth::voiced(200.0, 150.0, 0.4, sr, 0.5)]);
    let f0 = estimate_f0(&utterance, &config)?;
    let loud = loudness_track(&utterance, FrameSpec::default())?;
    for seg in segment_voicing(&f0, &loud, utterance.duration(), &SegmentConfig::default())? {
        println!("  {:?} {:.2}-{:.2}s", seg.kind, seg.start, seg.end);
    }

    println!("frame descriptors (25 ms)");
    let tone = synth::sine(200.0, 0.025, sr, 0.5).samples;
    let noise = synth::white_noise(0.025, sr, 0.5, 11).samples;
    let bright = synth::sine(3000.0, 0.025, sr, 0.5).samples;
    println!("  HNR tone {:.1} dB, noise {:.1} dB", hnr(&tone, 200.0, sr).unwrap(), hnr(&noise, 200.0, sr).unwrap());
    println!(
        "  alpha ratio 200 Hz {:.1} dB, 3 kHz {:.1} dB",
        alpha_ratio(&tone, sr)?,
        alpha_ratio(&bright, sr)?
    );
    Ok(())
}
