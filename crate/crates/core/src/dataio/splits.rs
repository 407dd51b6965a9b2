use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, Sample};
use crate::category::{Category, NUM_CATEGORIES};

/// Balanced evaluation-set sampling: `n_sets` independent draws of
/// `per_class` samples from every category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub n_sets: usize,
    pub per_class: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            n_sets: 5,
            per_class: 326,
            seed: 0,
        }
    }
}

/// Returns `n_sets` index lists into `samples`, each sorted ascending.
/// Only samples with a hard `label` take part. Sets are drawn
/// independently, so they may overlap; no set repeats an index.
pub fn balanced_splits(samples: &[Sample], spec: &SplitSpec) -> Result<Vec<Vec<usize>>, DataError> {
    if spec.per_class == 0 || spec.n_sets == 0 {
        return Err(DataError::InvalidSplit("n_sets and per_class must be at least 1".into()));
    }
    let mut by_class: [Vec<usize>; NUM_CATEGORIES] = Default::default();
    for (i, s) in samples.iter().enumerate() {
        if let Some(c) = s.label {
            by_class[c.index()].push(i);
        }
    }
    for (c, pool) in by_class.iter().enumerate() {
        if pool.len() < spec.per_class {
            return Err(DataError::InsufficientClass {
                class: Category::ALL[c],
                available: pool.len(),
                needed: spec.per_class,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sets = (0..spec.n_sets)
        .map(|_| {
            let mut set = Vec::with_capacity(spec.per_class * NUM_CATEGORIES);
            for pool in &by_class {
                let mut pool = pool.clone();
                let (chosen, _) = pool.partial_shuffle(&mut rng, spec.per_class);
                set.extend_from_slice(chosen);
            }
            set.sort_unstable();
            set
        })
        .collect();
    Ok(sets)
}
