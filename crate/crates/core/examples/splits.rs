//! Draw class-balanced evaluation sets from a labelled sample list.
//!
//! cargo run --example splits

use std::collections::BTreeMap;

use mater::dataio::{balanced_splits, Sample, SplitSpec};
use mater::{Category, NUM_CATEGORIES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // An imbalanced pool: Neutral is plentiful, Fear is scarce.
    let sizes = [40, 12, 15, 10, 30, 80, 25, 11];
    let mut samples = Vec::new();
    for (c, &n) in sizes.iter().enumerate() {
        for k in 0..n {
            samples.push(Sample {
                id: format!("{}{k:03}", Category::ALL[c].code()),
                wav: format!("{c}/{k}.wav").into(),
                transcript: String::new(),
                words: vec![],
                votes: None,
                label: Some(Category::ALL[c]),
                attributes: None,
                embeddings: BTreeMap::new(),
            });
        }
    }
    let spec = SplitSpec {
        n_sets: 3,
        per_class: 10,
        seed: 42,
    };
    let sets = balanced_splits(&samples, &spec)?;
    for (i, set) in sets.iter().enumerate() {
        let mut counts = [0; NUM_CATEGORIES];
        for &j in set {
            counts[samples[j].label.unwrap().index()] += 1;
        }
        let head: Vec<&str> = set.iter().take(6).map(|&j| samples[j].id.as_str()).collect();
        println!("set {i}: {} samples, per class {counts:?}, first {head:?}", set.len());
    }
    match balanced_splits(&samples, &SplitSpec { per_class: 11, ..spec }) {
        Ok(_) => println!("unexpected success"),
        Err(e) => println!("asking for 11 per class: {e}"),
    }
    Ok(())
}
