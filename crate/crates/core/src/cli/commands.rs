//! The six subcommands as plain functions over typed arguments.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::RunConfig;
use super::CliError;
use crate::category::Category;
use crate::dataio::{
    balanced_splits, load_manifest, read_matrix, read_predictions, soft_targets, write_matrix, write_predictions,
    AttributePredictions, CategoricalPredictions, Manifest, MlevMatrix, PredictionFile, Sample, SplitSpec,
};
use crate::ensemble::{mean_probabilities, ProbMatrix, Strategy};
use crate::features::{bundle_from_audio, FeatureBundle, Sidecars, WORD_DIM};
use crate::metrics::{ccc_eval, classification_report};
use crate::neural::{
    load_checkpoint, predict, save_checkpoint, train_with, write_history, LossKind, Model, Predictions, Target, Task,
    TrainExample,
};
use crate::signal::read_wav;
use crate::tensor::Tensor;

/// Cache file stem for a sample id; characters outside `[A-Za-z0-9._-]`
/// become `_`.
pub fn cache_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect()
}

pub fn word_cache_path(cache: &Path, id: &str) -> PathBuf {
    cache.join(format!("{}.word.mlev", cache_stem(id)))
}

pub fn utterance_cache_path(cache: &Path, id: &str) -> PathBuf {
    cache.join(format!("{}.utt.mlev", cache_stem(id)))
}

fn required(p: Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    p.ok_or_else(|| CliError::Validation(format!("no {what} given (flag or config)")))
}

fn check_stems(manifest: &Manifest) -> Result<(), CliError> {
    let mut seen = BTreeMap::new();
    for s in &manifest.samples {
        if let Some(other) = seen.insert(cache_stem(&s.id), &s.id) {
            return Err(CliError::Validation(format!(
                "sample ids {other:?} and {:?} map to the same cache file",
                s.id
            )));
        }
    }
    Ok(())
}

/// Summary of an extraction run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractReport {
    pub written: usize,
    /// `(sample id, message)` for every sample that failed.
    pub failures: Vec<(String, String)>,
}

/// Writes one word-level and one utterance-level MLEV file per sample.
/// A failing sample does not stop the others.
pub fn cmd_extract(config: &RunConfig, manifest: &Path, cache: &Path) -> Result<ExtractReport, CliError> {
    let manifest = load_manifest(manifest)?;
    check_stems(&manifest)?;
    let mut sidecars = Sidecars::default();
    if let Some(p) = &config.syntax_sidecar {
        sidecars.load_syntax(p)?;
    }
    if let Some(p) = &config.sentiment_sidecar {
        sidecars.load_sentiment(p)?;
    }
    std::fs::create_dir_all(cache).map_err(|e| CliError::Runtime(format!("{}: {e}", cache.display())))?;
    let results: Vec<Result<(), String>> = manifest
        .samples
        .par_iter()
        .map(|s| {
            let audio = read_wav(manifest.resolve(&s.wav)).map_err(|e| e.to_string())?;
            let b = bundle_from_audio(
                &audio,
                &s.words,
                &s.transcript,
                sidecars.syntax.get(&s.id).map(Vec::as_slice),
                sidecars.sentiment.get(&s.id).map(Vec::as_slice),
                &config.extraction,
            )
            .map_err(|e| e.to_string())?;
            let word = if b.word_seq.is_empty() {
                MlevMatrix::new(0, WORD_DIM, Vec::new())
            } else {
                MlevMatrix::from_tensor(&b.word_seq)
            };
            write_matrix(word_cache_path(cache, &s.id), &word).map_err(|e| e.to_string())?;
            let utt = MlevMatrix::from_tensor(&Tensor::from_rows(&[&b.utterance], b.utterance.len()));
            write_matrix(utterance_cache_path(cache, &s.id), &utt).map_err(|e| e.to_string())
        })
        .collect();
    let mut report = ExtractReport {
        written: 0,
        failures: Vec::new(),
    };
    for (s, r) in manifest.samples.iter().zip(results) {
        match r {
            Ok(()) => report.written += 1,
            Err(m) => report.failures.push((s.id.clone(), m)),
        }
    }
    Ok(report)
}

fn missing_cache(path: &Path) -> CliError {
    CliError::Validation(format!(
        "feature cache file {} is missing; run `mater extract` first",
        path.display()
    ))
}

/// Assembles a bundle from the cache and the manifest's embedding files.
/// Levels the model does not use are left empty.
pub fn load_bundle(
    sample: &Sample,
    manifest: &Manifest,
    cache: &Path,
    word: bool,
    utterance: bool,
    sources: &[String],
) -> Result<FeatureBundle, CliError> {
    let read = |p: PathBuf| -> Result<MlevMatrix, CliError> {
        if !p.exists() {
            return Err(missing_cache(&p));
        }
        Ok(read_matrix(&p)?)
    };
    let word_seq = if word {
        let m = read(word_cache_path(cache, &sample.id))?;
        if m.rows == 0 {
            Tensor::zeros(&[0, m.cols])
        } else {
            m.to_tensor()
        }
    } else {
        Tensor::zeros(&[0, WORD_DIM])
    };
    let utterance = if utterance {
        read(utterance_cache_path(cache, &sample.id))?.data.iter().map(|&v| v as f64).collect()
    } else {
        Vec::new()
    };
    let mut embeddings = BTreeMap::new();
    for name in sources {
        if let Some(rel) = sample.embeddings.get(name) {
            let m = read_matrix(manifest.resolve(rel))?;
            if m.rows > 0 {
                embeddings.insert(name.clone(), m.to_tensor());
            }
        }
    }
    Ok(FeatureBundle {
        word_seq,
        utterance,
        embeddings,
    })
}

fn target_for(sample: &Sample, task: Task, soft: bool) -> Result<Option<Target>, CliError> {
    Ok(match task {
        Task::Attributes => sample.attributes.map(|a| Target::Attributes(a.as_array())),
        Task::Categorical => match (&sample.votes, sample.label) {
            (Some(v), _) if soft => Some(Target::Soft(soft_targets(v)?)),
            (_, Some(l)) => Some(Target::Class(l)),
            (Some(v), None) => Some(Target::Class(soft_targets(v)?.argmax())),
            (None, None) => None,
        },
    })
}

/// Width of each embedding source, taken from the first sample carrying it.
fn source_dims(manifest: &Manifest, names: &[String]) -> Result<Vec<(String, usize)>, CliError> {
    names
        .iter()
        .map(|n| {
            let s = manifest
                .samples
                .iter()
                .find(|s| s.embeddings.contains_key(n))
                .ok_or_else(|| CliError::Validation(format!("no sample provides embedding source {n:?}")))?;
            Ok((n.clone(), read_matrix(manifest.resolve(&s.embeddings[n]))?.cols))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub samples: usize,
    pub skipped: usize,
    pub checkpoint: PathBuf,
    pub history: PathBuf,
    pub final_loss: f64,
    pub final_metric: f64,
}

/// Trains on every manifest sample that has a target for the task.
pub fn cmd_train(config: &RunConfig) -> Result<TrainReport, CliError> {
    config.validate()?;
    let manifest_path = required(config.manifest.clone(), "manifest")?;
    let cache = required(config.cache.clone(), "feature cache directory")?;
    let checkpoint = required(config.checkpoint.clone(), "checkpoint path")?;
    let history_path = config.history.clone().unwrap_or_else(|| checkpoint.with_extension("history.csv"));
    if !cache.is_dir() {
        return Err(CliError::Validation(format!(
            "feature cache {} does not exist; run `mater extract` first",
            cache.display()
        )));
    }
    let manifest = load_manifest(&manifest_path)?;
    let task = config.task();
    let mut examples = Vec::new();
    let mut skipped = 0;
    let sources = config.features.embeddings.clone();
    for s in &manifest.samples {
        match target_for(s, task, config.soft_labels)? {
            Some(target) => {
                let bundle = load_bundle(s, &manifest, &cache, config.features.word, config.features.utterance, &sources)?;
                examples.push(TrainExample { bundle, target });
            }
            None => skipped += 1,
        }
    }
    if examples.is_empty() {
        return Err(CliError::Validation(format!("no sample in the manifest has a {task:?} target")));
    }
    let utterance_dim = examples.iter().map(|e| e.bundle.utterance.len()).find(|&n| n > 0).unwrap_or(0);
    if config.features.utterance && utterance_dim == 0 {
        return Err(CliError::Validation("utterance level enabled but the cache holds no utterance features".into()));
    }
    let model_config = config.model_config(utterance_dim, source_dims(&manifest, &sources)?);
    let mut train_config = config.train.clone();
    if train_config.loss.is_none() && config.soft_labels && task == Task::Categorical {
        train_config.loss = Some(LossKind::SoftCe);
    }
    let outcome = train_with(&examples, &model_config, &train_config, |s| {
        eprintln!("epoch {:>4}  loss {:.6}  metric {:.4}", s.epoch, s.loss, s.metric);
    })?;
    save_checkpoint(&checkpoint, &outcome.model)?;
    write_history(&history_path, &outcome.history)?;
    let last = outcome.history.last().expect("epochs >= 1");
    Ok(TrainReport {
        samples: examples.len(),
        skipped,
        checkpoint,
        history: history_path,
        final_loss: last.loss,
        final_metric: last.metric,
    })
}

/// Predicts every manifest sample with a trained checkpoint. Attribute
/// outputs are clamped to `[1, 7]`.
pub fn cmd_predict(checkpoint: &Path, manifest: &Path, cache: &Path, out: &Path) -> Result<PredictionFile, CliError> {
    let model: Model = load_checkpoint(checkpoint)?;
    let manifest = load_manifest(manifest)?;
    let cfg = &model.config;
    let sources: Vec<String> = cfg.sources.iter().map(|(n, _)| n.clone()).collect();
    let bundles: Vec<FeatureBundle> = manifest
        .samples
        .iter()
        .map(|s| load_bundle(s, &manifest, cache, cfg.use_word, cfg.utterance_dim > 0, &sources))
        .collect::<Result<_, _>>()?;
    let refs: Vec<&FeatureBundle> = bundles.iter().collect();
    let ids: Vec<String> = manifest.samples.iter().map(|s| s.id.clone()).collect();
    let file = match predict(&model, &refs)? {
        Predictions::Categorical(probs) => PredictionFile::Categorical(CategoricalPredictions::from_probs(ids, probs)),
        Predictions::Attributes(values) => PredictionFile::Attributes(AttributePredictions {
            ids,
            values: values.into_iter().map(|v| v.map(|x| x.clamp(1.0, 7.0))).collect(),
        }),
    };
    write_predictions(out, &file)?;
    Ok(file)
}

/// Combines categorical prediction files. The output carries the mean
/// probabilities and the strategy's labels.
pub fn cmd_ensemble(inputs: &[PathBuf], strategy: Strategy, out: &Path) -> Result<CategoricalPredictions, CliError> {
    if inputs.is_empty() {
        return Err(CliError::Validation("ensemble needs at least one prediction file".into()));
    }
    let mut ids: Option<Vec<String>> = None;
    let mut models = Vec::new();
    for p in inputs {
        let PredictionFile::Categorical(preds) = read_predictions(p)? else {
            return Err(CliError::Validation(format!("{} holds attribute predictions", p.display())));
        };
        match &ids {
            None => ids = Some(preds.ids.clone()),
            Some(first) if *first != preds.ids => {
                return Err(CliError::Validation(format!(
                    "{} lists different sample ids than {}",
                    p.display(),
                    inputs[0].display()
                )))
            }
            Some(_) => {}
        }
        models.push(ProbMatrix::new(p.display().to_string(), preds.probs)?);
    }
    let labels = strategy.combine(&models)?;
    let result = CategoricalPredictions {
        ids: ids.expect("at least one input"),
        probs: mean_probabilities(&models)?,
        labels,
    };
    write_predictions(out, &PredictionFile::Categorical(result.clone()))?;
    Ok(result)
}

/// Evaluation report; the variant follows the prediction file.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum EvaluationReport {
    Categorical(crate::metrics::ClassificationReport),
    Attributes(crate::metrics::AttributeReport),
}

/// Scores predictions against manifest golds. Every predicted id needs a gold.
pub fn cmd_evaluate(predictions: &Path, manifest: &Path) -> Result<EvaluationReport, CliError> {
    let preds = read_predictions(predictions)?;
    let manifest = load_manifest(manifest)?;
    let sample = |id: &str| {
        manifest
            .get(id)
            .ok_or_else(|| CliError::Validation(format!("prediction id {id:?} is not in the manifest")))
    };
    match preds {
        PredictionFile::Categorical(p) => {
            let golds: Vec<Category> = p
                .ids
                .iter()
                .map(|id| match target_for(sample(id)?, Task::Categorical, false)? {
                    Some(Target::Class(c)) => Ok(c),
                    _ => Err(CliError::Validation(format!("sample {id:?} has no categorical gold"))),
                })
                .collect::<Result<_, _>>()?;
            Ok(EvaluationReport::Categorical(classification_report(&p.labels, &golds)?))
        }
        PredictionFile::Attributes(p) => {
            let golds: Vec<[f64; 3]> = p
                .ids
                .iter()
                .map(|id| {
                    sample(id)?
                        .attributes
                        .map(|a| a.as_array())
                        .ok_or_else(|| CliError::Validation(format!("sample {id:?} has no attribute gold")))
                })
                .collect::<Result<_, _>>()?;
            let clamped: Vec<[f64; 3]> = p.values.iter().map(|v| v.map(|x| x.clamp(1.0, 7.0))).collect();
            Ok(EvaluationReport::Attributes(ccc_eval(&clamped, &golds)?))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitOutput {
    pub seed: u64,
    pub per_class: usize,
    pub sets: Vec<Vec<String>>,
}

/// Draws balanced evaluation sets and returns them as sample ids.
pub fn cmd_make_splits(manifest: &Path, spec: &SplitSpec) -> Result<SplitOutput, CliError> {
    let manifest = load_manifest(manifest)?;
    let sets = balanced_splits(&manifest.samples, spec)?;
    Ok(SplitOutput {
        seed: spec.seed,
        per_class: spec.per_class,
        sets: sets
            .into_iter()
            .map(|set| set.into_iter().map(|i| manifest.samples[i].id.clone()).collect())
            .collect(),
    })
}

/// Writes pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

