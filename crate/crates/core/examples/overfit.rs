//! Train the fusion network at desk dimensions on a separable synthetic
//! 8-class dataset and watch it memorise the 64 samples.
//!
//! cargo run --release --example overfit

use mater::neural::{train_with, ModelConfig, Task, TrainConfig};
use mater::synth::{separable_dataset, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SyntheticSpec::default();
    let data = separable_dataset(&spec);
    let model_cfg = ModelConfig::desk(Task::Categorical, spec.utterance_dim, spec.sources.clone());
    println!(
        "{} samples; word LSTM {}x{}, PLE {} bins, Perceiver {}x{} over {:?}",
        data.len(),
        model_cfg.lstm_layers,
        model_cfg.word_hidden,
        model_cfg.ple_bins,
        model_cfg.latent_len,
        model_cfg.latent_dim,
        model_cfg.sources.iter().map(|s| &s.0).collect::<Vec<_>>()
    );
    let cfg = TrainConfig {
        epochs: 200,
        learning_rate: 1e-3,
        batch_size: 16,
        seed: 3,
        ..TrainConfig::default()
    };
    let out = train_with(&data, &model_cfg, &cfg, |s| {
        if s.epoch == 1 || s.epoch % 25 == 0 {
            println!("epoch {:3}  loss {:.5}  accuracy {:5.1}%", s.epoch, s.loss, s.metric);
        }
    })?;
    let last = out.history.last().unwrap();
    println!("final training accuracy {:.1}%", last.metric);
    Ok(())
}
