//! The batch workflow of the `mater` binary, driven in-process on a tiny
//! synthetic corpus: extract, train two seeds, predict, ensemble, evaluate
//! and make-splits.
//!
//! cargo run --release --example cli_workflow

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::Path;

use mater::cli::main_with_args;
use mater::dataio::{save_manifest, Sample};
use mater::features::WordAlignment;
use mater::signal::write_wav;
use mater::{synth, Category};

fn run(args: &[&dyn AsRef<std::ffi::OsStr>]) -> i32 {
    let argv: Vec<OsString> = std::iter::once(OsString::from("mater"))
        .chain(args.iter().map(|a| a.as_ref().to_os_string()))
        .collect();
    let shown: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let code = main_with_args(argv);
    println!("$ mater {}  -> exit {code}", shown.join(" "));
    code
}

fn corpus(dir: &Path) -> std::io::Result<()> {
    let tokens = ["oh", "no", "not", "again"];
    let mut samples = Vec::new();
    for (c, cat) in Category::ALL.iter().enumerate() {
        for k in 0..2 {
            let f0 = 100.0 + 25.0 * c as f64 + 5.0 * k as f64;
            let audio = synth::concat(&[
                synth::voiced(f0, f0 * (1.0 + 0.05 * c as f64), 0.5, 16000, 0.2 + 0.05 * c as f64),
                synth::silence(0.1 + 0.02 * c as f64, 16000),
                synth::voiced(f0, f0 * 0.9, 0.3, 16000, 0.4),
            ]);
            let wav = format!("{}{k}.wav", cat.code());
            write_wav(dir.join(&wav), &audio).map_err(std::io::Error::other)?;
            let words = tokens
                .iter()
                .enumerate()
                .map(|(i, t)| WordAlignment {
                    token: t.to_string(),
                    start: 0.02 + 0.2 * i as f64,
                    end: 0.18 + 0.2 * i as f64,
                })
                .collect();
            samples.push(Sample {
                id: format!("{}/{k}", cat.code()),
                wav: wav.into(),
                transcript: tokens.join(" "),
                words,
                votes: None,
                label: Some(*cat),
                attributes: None,
                embeddings: BTreeMap::new(),
            });
        }
    }
    save_manifest(dir.join("manifest.jsonl"), &samples).map_err(std::io::Error::other)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let d = dir.path();
    corpus(d)?;
    std::fs::write(
        d.join("config.json"),
        r#"{
  "task": "categorical",
  "preset": "desk",
  "features": {"word": true, "utterance": true},
  "manifest": "manifest.jsonl",
  "cache": "cache",
  "train": {"epochs": 30, "learning_rate": 0.003, "batch_size": 8}
}"#,
    )?;
    let cfg = d.join("config.json");
    let manifest = d.join("manifest.jsonl");
    let cache = d.join("cache");

    run(&[&"extract", &"--config", &cfg]);
    for seed in ["1", "2"] {
        let ckpt = d.join(format!("model{seed}.mtrp"));
        run(&[&"--seed", &seed, &"train", &"--config", &cfg, &"--checkpoint", &ckpt]);
        let out = d.join(format!("pred{seed}.csv"));
        run(&[&"predict", &"--checkpoint", &ckpt, &"--manifest", &manifest, &"--cache", &cache, &"--out", &out]);
    }
    print!("{}", std::fs::read_to_string(d.join("model1.history.csv"))?.lines().take(4).map(|l| format!("  {l}\n")).collect::<String>());
    let ens = d.join("ensemble.csv");
    run(&[&"ensemble", &d.join("pred1.csv"), &d.join("pred2.csv"), &"--strategy", &"uncertainty", &"--out", &ens]);
    let report = d.join("report.json");
    run(&[&"evaluate", &"--predictions", &ens, &"--manifest", &manifest, &"--out", &report]);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report)?)?;
    println!("  ensemble macro-F1 {:.1}, accuracy {:.1}", json["macro_f1"].as_f64().unwrap(), json["accuracy"].as_f64().unwrap());
    let splits = d.join("splits.json");
    run(&[&"make-splits", &"--manifest", &manifest, &"--sets", &"2", &"--per-class", &"1", &"--out", &splits]);

    // Validation failures exit with 1, runtime failures with 2.
    run(&[&"ensemble", &d.join("pred1.csv"), &"--strategy", &"median", &"--out", &ens]);
    run(&[&"predict", &"--checkpoint", &d.join("missing.mtrp"), &"--manifest", &manifest, &"--cache", &cache, &"--out", &ens]);
    Ok(())
}
