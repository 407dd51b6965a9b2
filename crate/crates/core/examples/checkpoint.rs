//! Save a trained model, load it back and check the predictions agree.
//!
//! cargo run --release --example checkpoint

use mater::neural::{load_checkpoint, predict, save_checkpoint, train, ModelConfig, Predictions, Task, TrainConfig};
use mater::synth::{separable_dataset, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SyntheticSpec {
        samples_per_class: 2,
        ..SyntheticSpec::default()
    };
    let data = separable_dataset(&spec);
    let model_cfg = ModelConfig::desk(Task::Categorical, spec.utterance_dim, spec.sources.clone());
    let cfg = TrainConfig {
        epochs: 10,
        learning_rate: 1e-3,
        batch_size: 8,
        ..TrainConfig::default()
    };
    let model = train(&data, &model_cfg, &cfg)?.model;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("model.mtrp");
    save_checkpoint(&path, &model)?;
    println!("checkpoint: {} bytes", std::fs::metadata(&path)?.len());
    let loaded = load_checkpoint(&path)?;
    println!(
        "inferred config: task {:?}, word hidden {}, {} PLE bins, sources {:?}",
        loaded.config.task, loaded.config.word_hidden, loaded.config.ple_bins, loaded.config.sources
    );

    let bundles: Vec<_> = data.iter().map(|e| &e.bundle).collect();
    let (Predictions::Categorical(a), Predictions::Categorical(b)) = (predict(&model, &bundles)?, predict(&loaded, &bundles)?) else {
        unreachable!("categorical model")
    };
    println!("predictions identical after reload: {}", a == b);
    Ok(())
}
