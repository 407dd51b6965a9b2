//! Word- and utterance-level features for one synthetic utterance.
//!
//! cargo run --example feature_levels

use mater::features::{bundle_from_audio, FeatureConfig, WordAlignment, PROSODY_LAYOUT, RHYTHM_LAYOUT, SYNTAX_DIM};
use mater::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sr = 16000;
    // Two phrases separated by a 250 ms pause.
    let audio = synth::concat(&[
        synth::voiced(140.0, 190.0, 0.6, sr, 0.5),
        synth::silence(0.25, sr),
        synth::voiced(180.0, 120.0, 0.5, sr, 0.3),
    ]);
    let span = |token: &str, start: f64, end: f64| WordAlignment {
        token: token.into(),
        start,
        end,
    };
    let words = vec![
        span("i", 0.02, 0.15),
        span("really", 0.17, 0.40),
        span("love", 0.42, 0.58),
        span("this", 0.87, 1.05),
        span("place", 1.08, 1.32),
    ];
    let transcript = "I really love this place!";
    let config = FeatureConfig::default();
    let bundle = bundle_from_audio(&audio, &words, transcript, None, None, &config)?;

    println!("word level: {} x {}", bundle.word_seq.rows(), bundle.word_seq.cols());
    for (i, w) in words.iter().enumerate() {
        let row = bundle.word_seq.row(i);
        let syntax: Vec<String> = row[..SYNTAX_DIM].iter().map(|v| format!("{v:.0}")).collect();
        println!("  {:<7} syntax [{}]", w.token, syntax.join(""));
    }
    println!("  prosody of {:?}:", words[1].token);
    for (name, v) in PROSODY_LAYOUT.iter().zip(&bundle.word_seq.row(1)[SYNTAX_DIM..]) {
        println!("    {name:<28} {v:10.4}");
    }

    let sentiment = config.sentiment_dim;
    println!("utterance level: {} values ({sentiment} sentiment + {} rhythm)", bundle.utterance.len(), RHYTHM_LAYOUT.len());
    let active: Vec<(usize, f64)> =
        bundle.utterance[..sentiment].iter().cloned().enumerate().filter(|&(_, v)| v != 0.0).collect();
    println!("  non-zero sentiment slots {active:?}");
    for (name, v) in RHYTHM_LAYOUT.iter().zip(&bundle.utterance[sentiment..]) {
        println!("    {name:<28} {v:10.4}");
    }
    Ok(())
}
