//! Mini-batch training with Adam, and batched inference.
//!
//! Samples in a batch run forward in parallel; backward runs in fixed chunks
//! of [`GRAD_CHUNK`] whose partial gradients are summed in chunk order, so
//! results do not depend on the thread count.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::layers::Params;
use super::loss::{ccc, ccc_loss, weighted_ce, SoftTarget};
use super::model::{ForwardCache, Model, ModelConfig, ModelParams, Task};
use super::{NeuralError, Target, TrainExample};
use crate::category::NUM_CATEGORIES;
use crate::features::FeatureBundle;
use crate::tensor::softmax;

const GRAD_CHUNK: usize = 8;
const SHUFFLE_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Cross-entropy against the hard class (soft targets collapse to argmax).
    WeightedCe,
    /// Cross-entropy against the full vote distribution.
    SoftCe,
    /// Mean of `1 - ccc` over the three attributes.
    Ccc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    Uniform,
    /// `N / (8 N_c)` from training counts; absent classes get 1.
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// When set, the rate decays geometrically per epoch to this value.
    pub final_learning_rate: Option<f64>,
    pub batch_size: usize,
    pub seed: u64,
    pub class_weights: ClassWeighting,
    /// `None` picks cross-entropy for categories and CCC for attributes.
    pub loss: Option<LossKind>,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            learning_rate: 1e-5,
            final_learning_rate: None,
            batch_size: 128,
            seed: 0,
            class_weights: ClassWeighting::Inverse,
            loss: None,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, task: Task) -> Result<LossKind, NeuralError> {
        let bad = |m: &str| Err(NeuralError::Config(m.to_string()));
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive");
        }
        let rates = [Some(self.learning_rate), self.final_learning_rate];
        if rates.iter().flatten().any(|r| !r.is_finite() || *r < 0.0) {
            return bad("learning rates must be finite and non-negative");
        }
        if self.final_learning_rate.is_some_and(|f| (f == 0.0) != (self.learning_rate == 0.0)) {
            return bad("a decay schedule needs both learning rates positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.eps <= 0.0 {
            return bad("Adam needs betas in [0, 1) and a positive eps");
        }
        let kind = self.loss.unwrap_or(match task {
            Task::Categorical => LossKind::WeightedCe,
            Task::Attributes => LossKind::Ccc,
        });
        match (task, kind) {
            (Task::Categorical, LossKind::Ccc) => bad("ccc loss needs the attributes task"),
            (Task::Attributes, LossKind::WeightedCe | LossKind::SoftCe) => bad("cross-entropy needs the categorical task"),
            _ => Ok(kind),
        }
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        match self.final_learning_rate {
            Some(f) if self.epochs > 1 && self.learning_rate > 0.0 => {
                let frac = epoch as f64 / (self.epochs - 1) as f64;
                self.learning_rate * (f / self.learning_rate).powf(frac)
            }
            _ => self.learning_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    /// Accuracy in percent, or mean CCC of clamped attributes.
    pub metric: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub history: Vec<EpochStats>,
}

/// Adaptive moment estimation over any parameter container.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam {
            beta1,
            beta2,
            eps,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step<P: Params>(&mut self, params: &mut P, grads: &P, lr: f64) {
        let mut ps = Vec::new();
        params.params_mut(&mut ps);
        let mut gs = Vec::new();
        grads.params("", &mut gs);
        if self.m.is_empty() {
            self.m = ps.iter().map(|p| vec![0.0; p.len()]).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (k, (p, (_, g))) in ps.into_iter().zip(gs).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for (i, (p, &g)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                *p -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
            }
        }
    }
}

/// Per-class weights for the weighted cross-entropy.
pub fn class_weights(examples: &[TrainExample], mode: ClassWeighting) -> [f64; NUM_CATEGORIES] {
    let mut w = [1.0; NUM_CATEGORIES];
    if mode == ClassWeighting::Uniform {
        return w;
    }
    let mut counts = [0usize; NUM_CATEGORIES];
    for c in examples.iter().filter_map(|e| e.target.class()) {
        counts[c.index()] += 1;
    }
    let n: usize = counts.iter().sum();
    for (w, &nc) in w.iter_mut().zip(&counts) {
        if nc > 0 {
            *w = n as f64 / (NUM_CATEGORIES as f64 * nc as f64);
        }
    }
    w
}

fn ce_target(target: &Target, kind: LossKind) -> Result<SoftTarget, NeuralError> {
    match (target, kind) {
        (Target::Class(c), _) => Ok(SoftTarget::one_hot(*c)),
        (Target::Soft(s), LossKind::SoftCe) => Ok(*s),
        (Target::Soft(s), _) => Ok(SoftTarget::one_hot(s.argmax())),
        (Target::Attributes(_), _) => Err(NeuralError::Target("attribute target under cross-entropy".into())),
    }
}

/// Mean loss over a set of outputs and the gradient for each output.
fn output_loss(
    outs: &[&[f64]],
    targets: &[&Target],
    kind: LossKind,
    weights: &[f64; NUM_CATEGORIES],
) -> Result<(f64, Vec<Vec<f64>>), NeuralError> {
    let b = outs.len() as f64;
    match kind {
        LossKind::WeightedCe | LossKind::SoftCe => {
            let mut loss = 0.0;
            let mut douts = Vec::with_capacity(outs.len());
            for (o, t) in outs.iter().zip(targets) {
                let (l, g) = weighted_ce(o, &ce_target(t, kind)?, weights);
                loss += l / b;
                douts.push(g.into_iter().map(|v| v / b).collect());
            }
            Ok((loss, douts))
        }
        LossKind::Ccc => {
            let gold = attribute_targets(targets)?;
            let mut loss = 0.0;
            let mut douts = vec![vec![0.0; 3]; outs.len()];
            for d in 0..3 {
                let pred: Vec<f64> = outs.iter().map(|o| o[d]).collect();
                let y: Vec<f64> = gold.iter().map(|g| g[d]).collect();
                let (l, g) = ccc_loss(&pred, &y)?;
                loss += l / 3.0;
                for (dout, gi) in douts.iter_mut().zip(g) {
                    dout[d] = gi / 3.0;
                }
            }
            Ok((loss, douts))
        }
    }
}

fn attribute_targets(targets: &[&Target]) -> Result<Vec<[f64; 3]>, NeuralError> {
    targets
        .iter()
        .map(|t| match t {
            Target::Attributes(a) => Ok(*a),
            _ => Err(NeuralError::Target("categorical target under ccc loss".into())),
        })
        .collect()
}

/// Loss and summed parameter gradient for one batch.
pub fn batch_loss(
    model: &Model,
    batch: &[&TrainExample],
    kind: LossKind,
    weights: &[f64; NUM_CATEGORIES],
) -> Result<(f64, ModelParams), NeuralError> {
    let fwd: Vec<(Vec<f64>, ForwardCache)> =
        batch.par_iter().map(|e| model.forward(&e.bundle)).collect::<Result<_, _>>()?;
    let outs: Vec<&[f64]> = fwd.iter().map(|(o, _)| o.as_slice()).collect();
    let targets: Vec<&Target> = batch.iter().map(|e| &e.target).collect();
    let (loss, douts) = output_loss(&outs, &targets, kind, weights)?;
    let partial: Vec<ModelParams> = fwd
        .par_chunks(GRAD_CHUNK)
        .zip(douts.par_chunks(GRAD_CHUNK))
        .map(|(f, d)| {
            let mut g = model.zero_grads();
            for ((_, cache), dout) in f.iter().zip(d) {
                model.backward(cache, dout, &mut g);
            }
            g
        })
        .collect();
    let mut grad = model.zero_grads();
    for g in &partial {
        grad.accumulate(g);
    }
    Ok((loss, grad))
}

fn all_finite<P: Params>(p: &P) -> bool {
    let mut ts = Vec::new();
    p.params("", &mut ts);
    ts.iter().all(|(_, t)| t.is_finite())
}

/// Splits the shuffled order into batches, folding a trailing singleton
/// into the previous batch so every batch has at least two samples.
fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() == 1) {
        out.pop();
        let start = order.len() - 1 - out.last().map_or(0, |b| b.len());
        *out.last_mut().expect("non-empty") = &order[start..];
    }
    out
}

/// Loss and metric over a whole dataset.
pub fn evaluate(model: &Model, examples: &[TrainExample], kind: LossKind, weights: &[f64; NUM_CATEGORIES]) -> Result<(f64, f64), NeuralError> {
    let outs: Vec<Vec<f64>> = examples
        .par_iter()
        .map(|e| model.forward(&e.bundle).map(|(o, _)| o))
        .collect::<Result<_, _>>()?;
    let refs: Vec<&[f64]> = outs.iter().map(Vec::as_slice).collect();
    let targets: Vec<&Target> = examples.iter().map(|e| &e.target).collect();
    let (loss, _) = output_loss(&refs, &targets, kind, weights)?;
    let metric = match model.config.task {
        Task::Categorical => {
            let hits = outs
                .iter()
                .zip(&targets)
                .filter(|(o, t)| {
                    let mut row = [0.0; NUM_CATEGORIES];
                    row.copy_from_slice(o);
                    t.class() == Some(crate::ensemble::argmax(&row))
                })
                .count();
            100.0 * hits as f64 / outs.len() as f64
        }
        Task::Attributes => {
            let gold = attribute_targets(&targets)?;
            let mut total = 0.0;
            for d in 0..3 {
                let pred: Vec<f64> = outs.iter().map(|o| o[d].clamp(1.0, 7.0)).collect();
                let y: Vec<f64> = gold.iter().map(|g| g[d]).collect();
                total += ccc(&pred, &y)?;
            }
            total / 3.0
        }
    };
    Ok((loss, metric))
}

fn check_targets(task: Task, examples: &[TrainExample]) -> Result<(), NeuralError> {
    for (i, e) in examples.iter().enumerate() {
        let ok = matches!(
            (task, &e.target),
            (Task::Categorical, Target::Class(_) | Target::Soft(_)) | (Task::Attributes, Target::Attributes(_))
        );
        if !ok {
            return Err(NeuralError::Target(format!("example {i} does not match the {task:?} task")));
        }
    }
    Ok(())
}

/// Initialises a model from `config.seed`, fits its buffers on `examples`
/// and trains it.
pub fn train(examples: &[TrainExample], model_config: &ModelConfig, config: &TrainConfig) -> Result<TrainOutcome, NeuralError> {
    train_with(examples, model_config, config, |_| {})
}

/// As [`train`], calling `on_epoch` after every epoch.
pub fn train_with(
    examples: &[TrainExample],
    model_config: &ModelConfig,
    config: &TrainConfig,
    on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainOutcome, NeuralError> {
    if examples.is_empty() {
        return Err(NeuralError::EmptyDataset);
    }
    let mut model = Model::init(model_config.clone(), config.seed)?;
    let bundles: Vec<&FeatureBundle> = examples.iter().map(|e| &e.bundle).collect();
    model.fit_buffers(&bundles)?;
    train_model(model, examples, config, on_epoch)
}

/// Trains an already initialised model; buffers are left untouched.
pub fn train_model(
    mut model: Model,
    examples: &[TrainExample],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainOutcome, NeuralError> {
    if examples.is_empty() {
        return Err(NeuralError::EmptyDataset);
    }
    let kind = config.validate(model.config.task)?;
    check_targets(model.config.task, examples)?;
    let weights = match kind {
        LossKind::Ccc => [1.0; NUM_CATEGORIES],
        _ => class_weights(examples, config.class_weights),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_SALT);
    let mut adam = Adam::new(config.beta1, config.beta2, config.eps);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let lr = config.learning_rate_at(epoch);
        for (bi, batch) in batches(&order, config.batch_size).into_iter().enumerate() {
            let refs: Vec<&TrainExample> = batch.iter().map(|&i| &examples[i]).collect();
            let (loss, grad) = batch_loss(&model, &refs, kind, &weights)?;
            if !loss.is_finite() || !all_finite(&grad) {
                return Err(NeuralError::NonFinite(format!("loss or gradient at epoch {}, batch {}", epoch + 1, bi + 1)));
            }
            adam.step(&mut model.params, &grad, lr);
        }
        let (loss, metric) = evaluate(&model, examples, kind, &weights)?;
        if !loss.is_finite() {
            return Err(NeuralError::NonFinite(format!("evaluation loss after epoch {}", epoch + 1)));
        }
        let stats = EpochStats {
            epoch: epoch + 1,
            loss,
            metric,
        };
        on_epoch(&stats);
        history.push(stats);
    }
    Ok(TrainOutcome { model, history })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predictions {
    /// Softmax rows.
    Categorical(Vec<[f64; NUM_CATEGORIES]>),
    /// Raw regressor outputs; clamp to `[1, 7]` for evaluation.
    Attributes(Vec<[f64; 3]>),
}

impl Predictions {
    pub fn len(&self) -> usize {
        match self {
            Predictions::Categorical(r) => r.len(),
            Predictions::Attributes(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Runs the model over `bundles` in parallel, preserving order.
pub fn predict(model: &Model, bundles: &[&FeatureBundle]) -> Result<Predictions, NeuralError> {
    let outs: Vec<Vec<f64>> = bundles
        .par_iter()
        .map(|b| model.forward(b).map(|(o, _)| o))
        .collect::<Result<_, _>>()?;
    Ok(match model.config.task {
        Task::Categorical => Predictions::Categorical(
            outs.iter()
                .map(|o| {
                    let mut row = [0.0; NUM_CATEGORIES];
                    row.copy_from_slice(&softmax(o));
                    row
                })
                .collect(),
        ),
        Task::Attributes => Predictions::Attributes(outs.iter().map(|o| [o[0], o[1], o[2]]).collect()),
    })
}

/// Writes `epoch,loss,metric` rows.
pub fn write_history(path: &Path, history: &[EpochStats]) -> Result<(), NeuralError> {
    let io = |e: std::io::Error| NeuralError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    w.write_record(["epoch", "loss", "metric"]).map_err(|e| io(e.into()))?;
    for s in history {
        w.write_record([s.epoch.to_string(), s.loss.to_string(), s.metric.to_string()])
            .map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}
