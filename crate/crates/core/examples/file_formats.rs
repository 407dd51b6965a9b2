//! Manifests, MLEV matrices and prediction CSVs, written and read back.
//!
//! cargo run --example file_formats

use std::collections::BTreeMap;

use mater::dataio::{
    load_manifest, read_matrix, read_predictions, save_manifest, soft_targets, write_matrix, write_predictions, Attributes,
    CategoricalPredictions, MlevMatrix, PredictionFile, Sample,
};
use mater::features::WordAlignment;
use mater::Category;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let d = dir.path();

    // A frames x dim embedding, stored as little-endian f32.
    let emb = MlevMatrix::new(2, 3, vec![0.5, -1.0, 0.25, 2.0, 0.0, 1.5]);
    write_matrix(d.join("s1.emb.mlev"), &emb)?;
    let back = read_matrix(d.join("s1.emb.mlev"))?;
    println!("MLEV {}x{} -> {:?} (equal: {})", back.rows, back.cols, back.data, back == emb);

    let votes = BTreeMap::from([("H".to_string(), 3), ("N".to_string(), 1)]);
    println!("votes {votes:?} -> soft target {:?}", soft_targets(&votes)?.dist());
    let sample = Sample {
        id: "spk1/s1".into(),
        wav: "s1.wav".into(),
        transcript: "that is great".into(),
        words: vec![WordAlignment {
            token: "great".into(),
            start: 0.4,
            end: 0.8,
        }],
        votes: Some(votes),
        label: Some(Category::Happy),
        attributes: Some(Attributes {
            valence: 5.5,
            arousal: 4.0,
            dominance: 4.5,
        }),
        embeddings: BTreeMap::from([("wavlm".to_string(), "s1.emb.mlev".into())]),
    };
    save_manifest(d.join("manifest.jsonl"), std::slice::from_ref(&sample))?;
    print!("manifest line: {}", std::fs::read_to_string(d.join("manifest.jsonl"))?);
    let m = load_manifest(d.join("manifest.jsonl"))?;
    println!("embedding path resolves to {}", m.resolve(&m.samples[0].embeddings["wavlm"]).display());

    let preds = CategoricalPredictions::from_probs(
        vec!["spk1/s1".into()],
        vec![[0.05, 0.0, 0.05, 0.0, 0.7, 0.15, 0.05, 0.0]],
    );
    let file = PredictionFile::Categorical(preds);
    write_predictions(d.join("pred.csv"), &file)?;
    print!("predictions CSV:\n{}", std::fs::read_to_string(d.join("pred.csv"))?);
    println!("read back equal: {}", read_predictions(d.join("pred.csv"))? == file);
    Ok(())
}
