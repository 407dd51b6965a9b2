//! Compare the network's analytic gradients with central differences.
//!
//! cargo run --release --example gradient_check

use mater::neural::train::batch_loss;
use mater::neural::{check_params, LossKind, Model, ModelConfig, Task, TrainExample, FD_STEP};
use mater::synth::{separable_dataset, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SyntheticSpec {
        samples_per_class: 1,
        ..SyntheticSpec::default()
    };
    let data = separable_dataset(&spec);
    let batch: Vec<&TrainExample> = data.iter().take(4).collect();
    let weights = [1.0; 8];

    for (task, kind) in [(Task::Categorical, LossKind::WeightedCe), (Task::Attributes, LossKind::Ccc)] {
        let cfg = ModelConfig::desk(task, spec.utterance_dim, spec.sources.clone());
        let mut model = Model::init(cfg, 5)?;
        model.fit_buffers(&data.iter().map(|e| &e.bundle).collect::<Vec<_>>())?;
        let batch: Vec<TrainExample> = batch
            .iter()
            .enumerate()
            .map(|(i, e)| TrainExample {
                bundle: e.bundle.clone(),
                target: match task {
                    Task::Categorical => e.target.clone(),
                    Task::Attributes => mater::neural::Target::Attributes([2.0 + i as f64, 6.0 - i as f64, 4.0]),
                },
            })
            .collect();
        let refs: Vec<&TrainExample> = batch.iter().collect();
        let (loss, grad) = batch_loss(&model, &refs, kind, &weights)?;
        let check = check_params(
            &model.params,
            &grad,
            |p| {
                let m = Model {
                    params: p.clone(),
                    ..model.clone()
                };
                batch_loss(&m, &refs, kind, &weights).unwrap().0
            },
            FD_STEP,
            6,
        );
        println!(
            "{task:?}: loss {loss:.5}, {} entries checked, max relative error {:.2e} (worst {:?})",
            check.checked, check.max_rel_error, check.worst
        );
    }
    Ok(())
}
