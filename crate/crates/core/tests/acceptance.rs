//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use mater::cli::cmd_make_splits;
use mater::dataio::{
    encode_matrix, load_manifest, read_matrix, read_predictions, save_manifest, write_matrix, write_predictions, Attributes,
    AttributePredictions, CategoricalPredictions, MlevMatrix, PredictionFile, Sample, SplitSpec,
};
use mater::ensemble::{averaging_ensemble, majority_ensemble, uncertainty_ensemble, uncertainty_ensemble_with, ProbMatrix, TieBreak};
use mater::features::WordAlignment;
use mater::metrics::{accuracy, ccc_eval, macro_f1};
use mater::neural::{ccc, decode_checkpoint, encode_checkpoint, predict, train, Model, ModelConfig, Predictions, Task, TrainConfig};
use mater::signal::{estimate_f0, extract_periods, hnr, jitter_local, read_wav, shimmer_local, write_wav, PitchConfig};
use mater::synth::{self, ensemble_scenario, separable_dataset, SyntheticSpec};
use mater::{Category, NUM_CATEGORIES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

// ---------------------------------------------------------------------------
// 1. Uncertainty ensemble against a literal transcription of its definition.

/// Average rank of `scores[j]` among `scores`: 1 for the highest, tied
/// entries share the mean of the positions they span.
fn literal_rank(scores: &[f64], j: usize) -> f64 {
    let greater = scores.iter().filter(|&&s| s > scores[j]).count() as f64;
    let equal_others = scores.iter().enumerate().filter(|&(k, &s)| k != j && s == scores[j]).count() as f64;
    1.0 + greater + equal_others / 2.0
}

fn brute_force_uncertainty(models: &[Vec<[f64; NUM_CATEGORIES]>]) -> Vec<Category> {
    let m = models[0].len();
    let n = models.len() as f64;
    (0..m)
        .map(|j| {
            let mut avg = [0.0; NUM_CATEGORIES];
            let mut best_single = [f64::INFINITY; NUM_CATEGORIES];
            for model in models {
                for c in 0..NUM_CATEGORIES {
                    let column: Vec<f64> = model.iter().map(|row| row[c]).collect();
                    let r = literal_rank(&column, j);
                    avg[c] += r;
                    best_single[c] = best_single[c].min(r);
                }
            }
            avg.iter_mut().for_each(|a| *a /= n);
            let lowest = avg.iter().cloned().fold(f64::INFINITY, f64::min);
            let tied: Vec<usize> = (0..NUM_CATEGORIES).filter(|&c| avg[c] == lowest).collect();
            let top = tied.iter().map(|&c| best_single[c]).fold(f64::INFINITY, f64::min);
            let c = *tied.iter().find(|&&c| best_single[c] == top).unwrap();
            Category::ALL[c]
        })
        .collect()
}

fn random_rows(rng: &mut ChaCha8Rng, m: usize, quantize: bool) -> Vec<[f64; NUM_CATEGORIES]> {
    (0..m)
        .map(|_| {
            let mut row = [0.0; NUM_CATEGORIES];
            for v in row.iter_mut() {
                *v = if quantize {
                    rng.gen_range(0..4) as f64 + 1.0
                } else {
                    rng.gen_range(0.01..1.0)
                };
            }
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
            row
        })
        .collect()
}

fn worked_example() -> Vec<ProbMatrix> {
    let row = |x: f64, y: f64| {
        let mut r = [0.0; NUM_CATEGORIES];
        r[Category::Angry.index()] = x;
        r[Category::Contempt.index()] = y;
        r
    };
    vec![
        ProbMatrix::new("m1", vec![row(0.9, 0.1), row(0.4, 0.6), row(0.5, 0.5)]).unwrap(),
        ProbMatrix::new("m2", vec![row(0.6, 0.4), row(0.7, 0.3), row(0.2, 0.8)]).unwrap(),
    ]
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (x, y) = (Category::Angry, Category::Contempt);
    let worked = worked_example();
    let expected = vec![x, x, y];
    let got = uncertainty_ensemble(&worked).unwrap().labels;
    ensure(got == expected, || format!("worked example gave {got:?}"))?;
    let by_mean = uncertainty_ensemble_with(&worked, TieBreak::MeanProbability).unwrap().labels;
    ensure(by_mean == expected, || format!("mean-probability tie-break gave {by_mean:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut ties = 0;
    for instance in 0..1000 {
        let m = rng.gen_range(1..=6);
        let n = rng.gen_range(1..=3);
        let quantize = instance % 3 == 0;
        let rows: Vec<_> = (0..n).map(|_| random_rows(&mut rng, m, quantize)).collect();
        let models: Vec<ProbMatrix> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| ProbMatrix::new(format!("m{i}"), r.clone()).unwrap())
            .collect();
        let got = uncertainty_ensemble(&models).unwrap().labels;
        let want = brute_force_uncertainty(&rows);
        ensure(got == want, || format!("instance {instance}: {got:?} vs oracle {want:?}"))?;
        ties += quantize as usize;
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("worked example [X, X, Y]; 1000/1000 instances match ({ties} with ties) in {elapsed:.2?}"))
}

// ---------------------------------------------------------------------------
// 2. Labels are invariant to strictly increasing per-model, per-column maps.

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut averaging_changed = 0;
    for instance in 0..100 {
        let m = rng.gen_range(2..=12);
        let n = rng.gen_range(2..=4);
        let models: Vec<ProbMatrix> = (0..n)
            .map(|i| ProbMatrix::new(format!("m{i}"), random_rows(&mut rng, m, false)).unwrap())
            .collect();
        let warped: Vec<ProbMatrix> = models
            .iter()
            .map(|pm| {
                let maps: Vec<(f64, f64, f64)> = (0..NUM_CATEGORIES)
                    .map(|_| (rng.gen_range(0.5..5.0), rng.gen_range(0.3..3.0), rng.gen_range(0.0..1.0)))
                    .collect();
                let rows = pm
                    .rows()
                    .iter()
                    .map(|row| {
                        let mut out = *row;
                        for (c, v) in out.iter_mut().enumerate() {
                            let (a, e, b) = maps[c];
                            *v = a * v.powf(e) + b;
                        }
                        out
                    })
                    .collect();
                ProbMatrix::from_scores(pm.model_id(), rows).unwrap()
            })
            .collect();
        let before = uncertainty_ensemble(&models).unwrap().labels;
        let after = uncertainty_ensemble(&warped).unwrap().labels;
        ensure(before == after, || format!("instance {instance}: {before:?} became {after:?}"))?;
        if averaging_ensemble(&models).unwrap() != averaging_ensemble(&warped).unwrap() {
            averaging_changed += 1;
        }
    }
    ensure(averaging_changed > 0, || "averaging never changed".into())?;
    Ok(format!("uncertainty labels unchanged on 100/100; averaging changed on {averaging_changed}/100"))
}

// ---------------------------------------------------------------------------
// 3. One over-confident model: rank combination beats probability averaging.

// Frozen from the scenario below: 800 samples, model 1's Fear column raised
// to the power 0.3.
const SCENARIO_UNCERTAINTY: f64 = 85.0;
const SCENARIO_AVERAGING: f64 = 80.5;

fn criterion_3() -> Outcome {
    let mut over = [1.0; NUM_CATEGORIES];
    over[Category::Fear.index()] = 0.3;
    let (golds, models) = ensemble_scenario(100, 1.5, &[over, [1.0; NUM_CATEGORIES], [1.0; NUM_CATEGORIES]], 2024);
    let unc = accuracy(&uncertainty_ensemble(&models).unwrap().labels, &golds).unwrap();
    let avg = accuracy(&averaging_ensemble(&models).unwrap(), &golds).unwrap();
    let maj = accuracy(&majority_ensemble(&models).unwrap(), &golds).unwrap();
    ensure(unc >= avg, || format!("uncertainty {unc} < averaging {avg}"))?;
    ensure((unc - SCENARIO_UNCERTAINTY).abs() < 1e-9 && (avg - SCENARIO_AVERAGING).abs() < 1e-9, || {
        format!("scenario drifted: uncertainty {unc}, averaging {avg}")
    })?;
    Ok(format!("accuracy uncertainty {unc:.1}% >= averaging {avg:.1}% (gap {:.1}); majority {maj:.1}%", unc - avg))
}

// ---------------------------------------------------------------------------
// 4. Analytic gradients against central differences.

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let results = common::gradient_suite(1);
    let elapsed = start.elapsed();
    let mut worst_block: f64 = 0.0;
    let mut network: f64 = 0.0;
    for r in &results {
        ensure(r.check.max_rel_error < r.tolerance, || {
            format!("{}: {:.3e} >= {:.0e} at {:?}", r.name, r.check.max_rel_error, r.tolerance, r.check.worst)
        })?;
        if r.name.starts_with("network") {
            network = network.max(r.check.max_rel_error);
        } else {
            worst_block = worst_block.max(r.check.max_rel_error);
        }
    }
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "{} checks; worst block {worst_block:.2e}, worst end-to-end {network:.2e}, {elapsed:.2?}",
        results.len()
    ))
}

// ---------------------------------------------------------------------------
// 5. Memorising a small separable dataset.

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let spec = SyntheticSpec::default();
    let data = separable_dataset(&spec);
    ensure(data.len() == 64, || format!("{} samples", data.len()))?;
    let model_cfg = ModelConfig::desk(Task::Categorical, spec.utterance_dim, spec.sources.clone());
    let cfg = TrainConfig {
        epochs: 200,
        learning_rate: 1e-3,
        batch_size: 16,
        seed: 3,
        ..TrainConfig::default()
    };
    let a = train(&data, &model_cfg, &cfg).map_err(|e| e.to_string())?;
    let b = train(&data, &model_cfg, &cfg).map_err(|e| e.to_string())?;
    ensure(encode_checkpoint(&a.model) == encode_checkpoint(&b.model), || "parameters differ between runs".into())?;
    ensure(a.history == b.history, || "histories differ between runs".into())?;

    let bundles: Vec<_> = data.iter().map(|e| &e.bundle).collect();
    let Predictions::Categorical(rows) = predict(&a.model, &bundles).map_err(|e| e.to_string())? else {
        return Err("categorical predictions expected".into());
    };
    let preds: Vec<Category> = rows
        .iter()
        .map(|r| Category::ALL[(0..NUM_CATEGORIES).max_by(|&i, &j| r[i].total_cmp(&r[j])).unwrap()])
        .collect();
    let golds: Vec<Category> = data.iter().map(|e| e.target.class().unwrap()).collect();
    let acc = accuracy(&preds, &golds).unwrap();
    ensure(acc >= 95.0, || format!("final training accuracy {acc}%"))?;
    let first = a.history.iter().find(|h| h.metric >= 95.0).map(|h| h.epoch);
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(120))?;
    Ok(format!(
        "training accuracy {acc:.1}% after 200 epochs (>= 95% first at epoch {}); two runs bit-identical; {elapsed:.2?}",
        first.map_or("-".to_string(), |e| e.to_string())
    ))
}

// ---------------------------------------------------------------------------
// 6. Pitch, perturbation and HNR oracles.

fn criterion_6() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut tones = 0;
    for f in (80..=400).step_by(10) {
        let f = f as f64;
        let track = estimate_f0(&synth::sine(f, 0.5, 16000, 0.5), &PitchConfig::default()).map_err(|e| e.to_string())?;
        ensure(track.voiced_fraction() >= 0.95, || format!("{f} Hz: voiced fraction {}", track.voiced_fraction()))?;
        for &v in track.f0_hz.iter().filter(|&&v| v > 0.0) {
            worst = worst.max((v - f).abs());
        }
        ensure(worst <= 1.0, || format!("{f} Hz: error {worst:.3} Hz"))?;
        tones += 1;
    }

    let pulses = synth::impulse_train(&[0.005], 0.5, 16000, 0.8);
    let track = estimate_f0(&pulses, &PitchConfig::default()).map_err(|e| e.to_string())?;
    let p = extract_periods(&pulses, &track);
    ensure(p.len() > 50, || format!("{} periods", p.len()))?;
    ensure(p.jitter_local() == 0.0 && p.shimmer_local() == 0.0, || {
        format!("pulse train jitter {} shimmer {}", p.jitter_local(), p.shimmer_local())
    })?;

    // |0.5| ms mean difference over a 5.25 ms mean period; |1| over a mean of 1.5.
    let jit = jitter_local(&[0.005, 0.0055, 0.005, 0.0055]);
    let shim = shimmer_local(&[1.0, 2.0, 1.0, 2.0]);
    ensure((jit - 0.09524).abs() < 1e-4 && (jit - 0.5 / 5.25).abs() < 1e-6, || format!("jitter {jit}"))?;
    ensure((shim - 0.6667).abs() < 1e-4 && (shim - 1.0 / 1.5).abs() < 1e-6, || format!("shimmer {shim}"))?;

    let tone = synth::sine(200.0, 0.025, 16000, 0.5).samples;
    let noise = synth::white_noise(0.025, 16000, 0.5, 11).samples;
    let h_tone = hnr(&tone, 200.0, 16000).ok_or("no HNR for tone")?;
    let h_noise = hnr(&noise, 200.0, 16000).ok_or("no HNR for noise")?;
    ensure(h_tone >= 30.0, || format!("tone HNR {h_tone:.1} dB"))?;
    ensure(h_noise <= 5.0, || format!("noise HNR {h_noise:.1} dB"))?;
    Ok(format!(
        "{tones} tones 80-400 Hz within {worst:.3} Hz; pulse jitter/shimmer 0; jitter {jit:.5}, shimmer {shim:.4}; HNR tone {h_tone:.1} dB, noise {h_noise:.1} dB"
    ))
}

// ---------------------------------------------------------------------------
// 7. Metrics against brute-force counting and the direct CCC formula.

fn brute_force_scores(preds: &[Category], golds: &[Category]) -> (f64, f64) {
    let mut f1s = Vec::new();
    for c in Category::ALL {
        let tp = preds.iter().zip(golds).filter(|&(p, g)| *p == c && *g == c).count() as f64;
        let fp = preds.iter().zip(golds).filter(|&(p, g)| *p == c && *g != c).count() as f64;
        let fnn = preds.iter().zip(golds).filter(|&(p, g)| *p != c && *g == c).count() as f64;
        if tp + fnn == 0.0 {
            continue;
        }
        let precision = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
        let recall = tp / (tp + fnn);
        f1s.push(if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        });
    }
    let correct = preds.iter().zip(golds).filter(|(p, g)| p == g).count() as f64;
    (100.0 * f1s.iter().sum::<f64>() / f1s.len() as f64, 100.0 * correct / preds.len() as f64)
}

/// `1 - E[(x - y)^2] / (var x + var y + (mean x - mean y)^2)`, population moments.
fn direct_ccc(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let vx = x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / n;
    let vy = y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / n;
    let msd = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
    1.0 - msd / (vx + vy + (mx - my).powi(2))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for instance in 0..1000 {
        let n = rng.gen_range(1..=60);
        // Skewed draws so that some classes are absent or never predicted.
        let k = rng.gen_range(1..=NUM_CATEGORIES);
        let golds: Vec<Category> = (0..n).map(|_| Category::ALL[rng.gen_range(0..k)]).collect();
        let preds: Vec<Category> = (0..n).map(|_| Category::ALL[rng.gen_range(0..NUM_CATEGORIES)]).collect();
        let (f1, acc) = brute_force_scores(&preds, &golds);
        let got_f1 = macro_f1(&preds, &golds).unwrap();
        let got_acc = accuracy(&preds, &golds).unwrap();
        ensure(got_f1 == f1 && got_acc == acc, || {
            format!("instance {instance}: ({got_f1}, {got_acc}) vs oracle ({f1}, {acc})")
        })?;
    }

    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=50);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..7.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.6 * v + rng.gen_range(-2.0..2.0) + 1.0).collect();
        worst = worst.max((ccc(&x, &y).unwrap() - direct_ccc(&x, &y)).abs());
    }
    ensure(worst < 1e-12, || format!("CCC deviates by {worst:.2e}"))?;

    let seq = [1.0, 2.0, 3.0, 4.0, 5.0];
    let rev: Vec<f64> = seq.iter().rev().cloned().collect();
    let identical = ccc(&seq, &seq).unwrap();
    let reversed = ccc(&seq, &rev).unwrap();
    let shifted = ccc(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
    ensure((identical - 1.0).abs() < 1e-12, || format!("identical {identical}"))?;
    ensure((reversed + 1.0).abs() < 1e-12, || format!("reversed {reversed}"))?;
    ensure((shifted - 4.0 / 7.0).abs() < 1e-12, || format!("shifted {shifted}"))?;
    let golds: Vec<[f64; 3]> = seq.iter().map(|&v| [v, v, v]).collect();
    let preds: Vec<[f64; 3]> = seq.iter().zip(&rev).map(|(&v, &r)| [v, r, v + 1.0]).collect();
    let rep = ccc_eval(&preds, &golds).unwrap();
    ensure(
        (rep.valence - 1.0).abs() < 1e-12 && (rep.arousal + 1.0).abs() < 1e-12 && (rep.dominance - direct_ccc(&seq.map(|v| v + 1.0), &seq)).abs() < 1e-12,
        || format!("{rep:?}"),
    )?;
    Ok(format!(
        "macro-F1/accuracy exact on 1000/1000; CCC within {worst:.1e} of the direct formula; hand values 1, -1, 4/7"
    ))
}

// ---------------------------------------------------------------------------
// 8. Evaluation-set protocol and file-format round trips.

fn sample(i: usize, label: Category) -> Sample {
    Sample {
        id: format!("spk{:02}/utt{i:05}", i % 37),
        wav: format!("audio/{i}.wav").into(),
        transcript: "well, that's \"fine\"".into(),
        words: vec![
            WordAlignment {
                token: "well".into(),
                start: 0.1,
                end: 0.35,
            },
            WordAlignment {
                token: "fine".into(),
                start: 0.4,
                end: 0.9 + i as f64 * 1e-7,
            },
        ],
        votes: (i % 5 == 0).then(|| BTreeMap::from([(label.code().to_string(), 3), ("N".to_string(), 1)])),
        label: Some(label),
        attributes: (i % 2 == 0).then(|| Attributes {
            valence: 1.0 + (i % 7) as f64 * 0.85,
            arousal: 4.125,
            dominance: 7.0 - i as f64 / 1e4,
        }),
        embeddings: BTreeMap::from([("wavlm".to_string(), format!("emb/{i}.mlev").into())]),
    }
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();

    // 340 to 375 samples per class.
    let samples: Vec<Sample> = (0..NUM_CATEGORIES * 340 + 35)
        .map(|i| sample(i, Category::ALL[(i * 5 + i / 97) % NUM_CATEGORIES]))
        .collect();
    let manifest = d.join("manifest.jsonl");
    save_manifest(&manifest, &samples).map_err(|e| e.to_string())?;
    let spec = SplitSpec::default();
    let out = cmd_make_splits(&manifest, &spec).map_err(|e| e.to_string())?;
    let again = cmd_make_splits(&manifest, &spec).map_err(|e| e.to_string())?;
    ensure(out.sets == again.sets, || "splits are not deterministic".into())?;
    let other = cmd_make_splits(&manifest, &SplitSpec { seed: 1, ..spec }).map_err(|e| e.to_string())?;
    ensure(out.sets != other.sets, || "seed has no effect".into())?;
    ensure(out.sets.len() == 5, || format!("{} sets", out.sets.len()))?;
    let label_of: BTreeMap<&str, Category> = samples.iter().map(|s| (s.id.as_str(), s.label.unwrap())).collect();
    for (k, set) in out.sets.iter().enumerate() {
        ensure(set.len() == 2608, || format!("set {k} has {} samples", set.len()))?;
        let mut counts = [0usize; NUM_CATEGORIES];
        for id in set {
            counts[label_of[id.as_str()].index()] += 1;
        }
        ensure(counts.iter().all(|&c| c == 326), || format!("set {k} counts {counts:?}"))?;
    }

    // Manifest: load then save reproduces the bytes.
    let loaded = load_manifest(&manifest).map_err(|e| e.to_string())?;
    ensure(loaded.samples == samples, || "manifest values changed".into())?;
    let resaved = d.join("resaved.jsonl");
    save_manifest(&resaved, &loaded.samples).map_err(|e| e.to_string())?;
    ensure(std::fs::read(&manifest).unwrap() == std::fs::read(&resaved).unwrap(), || "manifest bytes changed".into())?;

    // MLEV matrices, including awkward float values.
    let data = vec![0.1f32, -0.0, f32::MIN_POSITIVE, 1e-40, f32::MAX, -3.25, 7.0, 1.0 / 3.0, 2.5e-8];
    let m = MlevMatrix::new(3, 3, data);
    let mp = d.join("m.mlev");
    write_matrix(&mp, &m).map_err(|e| e.to_string())?;
    let back = read_matrix(&mp).map_err(|e| e.to_string())?;
    ensure(back.data.iter().map(|v| v.to_bits()).eq(m.data.iter().map(|v| v.to_bits())), || "MLEV values changed".into())?;
    ensure(encode_matrix(&back) == std::fs::read(&mp).unwrap(), || "MLEV bytes changed".into())?;

    // Prediction CSVs, both kinds.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let ids: Vec<String> = (0..20).map(|i| format!("utt,{i}")).collect();
    let probs = random_rows(&mut rng, 20, false);
    let values: Vec<[f64; 3]> = (0..20).map(|_| [rng.gen_range(1.0..7.0), rng.gen_range(1.0..7.0), 1.0 / 3.0]).collect();
    for (name, file) in [
        ("cat.csv", PredictionFile::Categorical(CategoricalPredictions::from_probs(ids.clone(), probs))),
        ("att.csv", PredictionFile::Attributes(AttributePredictions { ids: ids.clone(), values })),
    ] {
        let p = d.join(name);
        write_predictions(&p, &file).map_err(|e| e.to_string())?;
        let back = read_predictions(&p).map_err(|e| e.to_string())?;
        ensure(back == file, || format!("{name} values changed"))?;
        let p2 = d.join(format!("re-{name}"));
        write_predictions(&p2, &back).map_err(|e| e.to_string())?;
        ensure(std::fs::read(&p).unwrap() == std::fs::read(&p2).unwrap(), || format!("{name} bytes changed"))?;
    }

    // Checkpoints, for both tasks.
    for task in [Task::Categorical, Task::Attributes] {
        let (model, _) = common::network_examples(task, 4);
        let bytes = encode_checkpoint(&model);
        let back: Model = decode_checkpoint(&bytes).map_err(|e| e.to_string())?;
        ensure(back.params == model.params && back.buffers == model.buffers, || format!("{task:?} checkpoint changed"))?;
        ensure(encode_checkpoint(&back) == bytes, || format!("{task:?} checkpoint bytes changed"))?;
    }

    // WAV is 16-bit PCM: the first write quantises, later ones are stable.
    let wav = d.join("a.wav");
    write_wav(&wav, &synth::voiced(140.0, 180.0, 0.3, 16000, 0.6)).map_err(|e| e.to_string())?;
    let audio = read_wav(&wav).map_err(|e| e.to_string())?;
    let wav2 = d.join("b.wav");
    write_wav(&wav2, &audio).map_err(|e| e.to_string())?;
    ensure(std::fs::read(&wav).unwrap() == std::fs::read(&wav2).unwrap(), || "WAV bytes changed".into())?;
    ensure(read_wav(&wav2).map_err(|e| e.to_string())?.samples == audio.samples, || "WAV samples changed".into())?;

    Ok("5 sets x 2608 with 326 per class, deterministic per seed; manifest, MLEV, prediction CSV, checkpoint and WAV round-trip exactly".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("uncertainty ensemble matches brute-force oracle", criterion_1),
        ("monotone-calibration invariance", criterion_2),
        ("synthetic ensemble advantage", criterion_3),
        ("gradient suite", criterion_4),
        ("overfit check", criterion_5),
        ("DSP oracles", criterion_6),
        ("metric oracles", criterion_7),
        ("split protocol and file round trips", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
