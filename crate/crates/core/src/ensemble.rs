//! Combining per-model category probabilities.
//!
//! The uncertainty-aware ensemble works on ranks rather than on the
//! probabilities themselves. For every model and every category the `m`
//! predicted probabilities are ranked in descending order (rank 1 = the sample
//! the model is most confident about for that category). A sample's
//! uncertainty for a category is its rank averaged over models, and the
//! predicted label is the category of minimal average uncertainty.
//!
//! Because only within-column order matters, the result is unchanged by any
//! strictly increasing recalibration of any model's scores for any single
//! category. Ties in average rank are broken by the best rank any single model
//! gives (still rank-only), then by canonical category order.
//! [`TieBreak::MeanProbability`] swaps the first tie-break for the higher mean
//! probability, which is not calibration invariant.
//!
//! Averaging and majority-vote baselines are provided for comparison.

use std::fmt;
use std::str::FromStr;

use crate::category::{Category, NUM_CATEGORIES};

/// Row-simplex tolerance for probability matrices.
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnsembleError {
    #[error("no models to ensemble")]
    NoModels,
    #[error("model {model:?} has no rows")]
    Empty { model: String },
    #[error("model {model:?} has {got} rows, expected {expected}")]
    LengthMismatch {
        model: String,
        expected: usize,
        got: usize,
    },
    #[error("model {model:?} row {row} sums to {sum}, not 1")]
    NotOnSimplex { model: String, row: usize, sum: f64 },
    #[error("model {model:?} row {row} has a negative or non-finite entry")]
    InvalidEntry { model: String, row: usize },
    #[error("unknown ensemble strategy {0:?} (expected uncertainty, averaging or majority)")]
    UnknownStrategy(String),
}

/// `m x 8` per-category scores of one model, columns in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    model_id: String,
    probs: Vec<[f64; NUM_CATEGORIES]>,
}

impl ProbMatrix {
    /// Probability matrix; every row must be non-negative and sum to 1
    /// within [`SIMPLEX_TOLERANCE`].
    pub fn new(model_id: impl Into<String>, probs: Vec<[f64; NUM_CATEGORIES]>) -> Result<Self, EnsembleError> {
        let m = Self::from_scores(model_id, probs)?;
        for (row, p) in m.probs.iter().enumerate() {
            if p.iter().any(|&v| v < 0.0) {
                return Err(EnsembleError::InvalidEntry {
                    model: m.model_id.clone(),
                    row,
                });
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
                return Err(EnsembleError::NotOnSimplex {
                    model: m.model_id.clone(),
                    row,
                    sum,
                });
            }
        }
        Ok(m)
    }

    /// Arbitrary finite confidence scores (e.g. uncalibrated or recalibrated
    /// outputs). Rank-based combination only needs their per-column order.
    pub fn from_scores(model_id: impl Into<String>, probs: Vec<[f64; NUM_CATEGORIES]>) -> Result<Self, EnsembleError> {
        let model_id = model_id.into();
        if probs.is_empty() {
            return Err(EnsembleError::Empty { model: model_id });
        }
        if let Some(row) = probs.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(EnsembleError::InvalidEntry { model: model_id, row });
        }
        Ok(ProbMatrix { model_id, probs })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn rows(&self) -> &[[f64; NUM_CATEGORIES]] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.probs.iter().map(|r| r[c]).collect()
    }

    /// Per-row argmax; exact ties go to the earlier canonical category.
    pub fn argmax_labels(&self) -> Vec<Category> {
        self.probs.iter().map(|r| argmax(r)).collect()
    }
}

pub(crate) fn argmax(row: &[f64; NUM_CATEGORIES]) -> Category {
    let mut best = 0;
    for c in 1..NUM_CATEGORIES {
        if row[c] > row[best] {
            best = c;
        }
    }
    Category::ALL[best]
}

/// `m x 8` ranks, 1 = highest score within the column. Ties share the
/// average of the positions they occupy.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    pub ranks: Vec<[f64; NUM_CATEGORIES]>,
}

pub fn rank_probs(probs: &ProbMatrix) -> RankMatrix {
    let m = probs.len();
    let mut ranks = vec![[0.0; NUM_CATEGORIES]; m];
    let mut order: Vec<usize> = (0..m).collect();
    for c in 0..NUM_CATEGORIES {
        order.sort_by(|&a, &b| probs.probs[b][c].total_cmp(&probs.probs[a][c]));
        let mut i = 0;
        while i < m {
            let mut j = i + 1;
            while j < m && probs.probs[order[j]][c] == probs.probs[order[i]][c] {
                j += 1;
            }
            // positions i+1 ..= j share their mean
            let avg = (i + 1 + j) as f64 / 2.0;
            for &k in &order[i..j] {
                ranks[k][c] = avg;
            }
            i = j;
        }
    }
    RankMatrix { ranks }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Lowest single-model rank, then canonical order. Calibration invariant.
    #[default]
    BestSingleRank,
    /// Highest mean probability across models, then canonical order.
    MeanProbability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePrediction {
    pub labels: Vec<Category>,
    pub avg_uncertainty: Vec<[f64; NUM_CATEGORIES]>,
}

fn check_models(models: &[ProbMatrix]) -> Result<usize, EnsembleError> {
    let first = models.first().ok_or(EnsembleError::NoModels)?;
    let m = first.len();
    for model in models {
        if model.len() != m {
            return Err(EnsembleError::LengthMismatch {
                model: model.model_id.clone(),
                expected: m,
                got: model.len(),
            });
        }
    }
    Ok(m)
}

/// Element-wise mean of the models' score matrices.
pub fn mean_probabilities(models: &[ProbMatrix]) -> Result<Vec<[f64; NUM_CATEGORIES]>, EnsembleError> {
    let m = check_models(models)?;
    let n = models.len() as f64;
    Ok((0..m)
        .map(|j| {
            let mut row = [0.0; NUM_CATEGORIES];
            for model in models {
                for (r, v) in row.iter_mut().zip(&model.probs[j]) {
                    *r += v;
                }
            }
            row.iter_mut().for_each(|r| *r /= n);
            row
        })
        .collect())
}

/// Rank-based uncertainty ensemble with the default tie-break.
pub fn uncertainty_ensemble(models: &[ProbMatrix]) -> Result<EnsemblePrediction, EnsembleError> {
    uncertainty_ensemble_with(models, TieBreak::default())
}

pub fn uncertainty_ensemble_with(
    models: &[ProbMatrix],
    tie_break: TieBreak,
) -> Result<EnsemblePrediction, EnsembleError> {
    let m = check_models(models)?;
    let ranks: Vec<RankMatrix> = models.iter().map(rank_probs).collect();
    let mean_probs = match tie_break {
        TieBreak::MeanProbability => Some(mean_probabilities(models)?),
        TieBreak::BestSingleRank => None,
    };
    let n = models.len() as f64;

    let mut labels = Vec::with_capacity(m);
    let mut avg_uncertainty = Vec::with_capacity(m);
    for j in 0..m {
        // Rank sums are multiples of 0.5 and therefore exact; compare sums, not means.
        let mut sums = [0.0; NUM_CATEGORIES];
        let mut best_single = [f64::INFINITY; NUM_CATEGORIES];
        for r in &ranks {
            for c in 0..NUM_CATEGORIES {
                sums[c] += r.ranks[j][c];
                best_single[c] = best_single[c].min(r.ranks[j][c]);
            }
        }
        let mut best = 0;
        for c in 1..NUM_CATEGORIES {
            let better = if sums[c] != sums[best] {
                sums[c] < sums[best]
            } else {
                match &mean_probs {
                    Some(mp) => mp[j][c] > mp[j][best],
                    None => best_single[c] < best_single[best],
                }
            };
            if better {
                best = c;
            }
        }
        labels.push(Category::ALL[best]);
        avg_uncertainty.push(sums.map(|s| s / n));
    }
    Ok(EnsemblePrediction {
        labels,
        avg_uncertainty,
    })
}

/// Argmax of the mean score matrix.
pub fn averaging_ensemble(models: &[ProbMatrix]) -> Result<Vec<Category>, EnsembleError> {
    Ok(mean_probabilities(models)?.iter().map(argmax).collect())
}

/// Plurality of per-model argmax votes; vote ties go to the highest mean
/// probability among the tied categories, then canonical order.
pub fn majority_ensemble(models: &[ProbMatrix]) -> Result<Vec<Category>, EnsembleError> {
    let mean = mean_probabilities(models)?;
    let votes: Vec<Vec<Category>> = models.iter().map(|m| m.argmax_labels()).collect();
    Ok(mean
        .iter()
        .enumerate()
        .map(|(j, mp)| {
            let mut counts = [0usize; NUM_CATEGORIES];
            for v in &votes {
                counts[v[j].index()] += 1;
            }
            let mut best = 0;
            for c in 1..NUM_CATEGORIES {
                if counts[c] > counts[best] || (counts[c] == counts[best] && mp[c] > mp[best]) {
                    best = c;
                }
            }
            Category::ALL[best]
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    Uncertainty,
    Averaging,
    Majority,
}

impl Strategy {
    pub fn combine(self, models: &[ProbMatrix]) -> Result<Vec<Category>, EnsembleError> {
        match self {
            Strategy::Uncertainty => Ok(uncertainty_ensemble(models)?.labels),
            Strategy::Averaging => averaging_ensemble(models),
            Strategy::Majority => majority_ensemble(models),
        }
    }
}

impl FromStr for Strategy {
    type Err = EnsembleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uncertainty" => Ok(Strategy::Uncertainty),
            "averaging" => Ok(Strategy::Averaging),
            "majority" => Ok(Strategy::Majority),
            other => Err(EnsembleError::UnknownStrategy(other.to_string())),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Uncertainty => "uncertainty",
            Strategy::Averaging => "averaging",
            Strategy::Majority => "majority",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Category::*;

    fn two_cat(rows: &[(f64, f64)]) -> Vec<[f64; 8]> {
        rows.iter()
            .map(|&(x, y)| {
                let mut r = [0.0; 8];
                r[0] = x;
                r[1] = y;
                r
            })
            .collect()
    }

    fn single_column(col: &[f64]) -> ProbMatrix {
        ProbMatrix::from_scores("t", col.iter().map(|&v| [v; 8]).collect()).unwrap()
    }

    #[test]
    fn ranks_descending_with_average_ties() {
        let r = rank_probs(&single_column(&[0.9, 0.4, 0.5]));
        assert_eq!(r.ranks.iter().map(|x| x[0]).collect::<Vec<_>>(), vec![1.0, 3.0, 2.0]);
        let r = rank_probs(&single_column(&[0.5, 0.5, 0.1]));
        assert_eq!(r.ranks.iter().map(|x| x[0]).collect::<Vec<_>>(), vec![1.5, 1.5, 3.0]);
        let r = rank_probs(&single_column(&[0.3]));
        assert_eq!(r.ranks, vec![[1.0; 8]]);
    }

    #[test]
    fn worked_two_model_example() {
        let m1 = ProbMatrix::new("m1", two_cat(&[(0.9, 0.1), (0.4, 0.6), (0.5, 0.5)])).unwrap();
        let m2 = ProbMatrix::new("m2", two_cat(&[(0.6, 0.4), (0.7, 0.3), (0.2, 0.8)])).unwrap();
        let models = [m1, m2];
        let pred = uncertainty_ensemble(&models).unwrap();
        assert_eq!(pred.labels, vec![Angry, Angry, Contempt]);
        assert_eq!(pred.avg_uncertainty[0][0], 1.5);
        assert_eq!(pred.avg_uncertainty[1][0], 2.0);
        assert_eq!(pred.avg_uncertainty[1][1], 2.0);
        assert_eq!(pred.avg_uncertainty[2][1], 1.5);
        let by_prob = uncertainty_ensemble_with(&models, TieBreak::MeanProbability).unwrap();
        assert_eq!(by_prob.labels, vec![Angry, Angry, Contempt]);
        assert_eq!(averaging_ensemble(&models).unwrap(), vec![Angry, Angry, Contempt]);
    }

    #[test]
    fn mean_probability_tie_break_prefers_the_more_probable_category() {
        // Same tie as the worked example but with the columns swapped, so only
        // the probability tie-break picks the second category.
        let m1 = ProbMatrix::new("m1", two_cat(&[(0.1, 0.9), (0.6, 0.4), (0.5, 0.5)])).unwrap();
        let m2 = ProbMatrix::new("m2", two_cat(&[(0.4, 0.6), (0.3, 0.7), (0.8, 0.2)])).unwrap();
        let models = [m1, m2];
        let by_prob = uncertainty_ensemble_with(&models, TieBreak::MeanProbability).unwrap();
        assert_eq!(by_prob.labels[1], Contempt);
        let by_rank = uncertainty_ensemble(&models).unwrap();
        assert_eq!(by_rank.labels[1], Angry);
    }

    #[test]
    fn single_model_uncertainty_equals_its_ranks() {
        let rows = vec![
            [0.30, 0.10, 0.05, 0.05, 0.20, 0.10, 0.15, 0.05],
            [0.10, 0.40, 0.10, 0.04, 0.06, 0.10, 0.10, 0.10],
            [0.05, 0.05, 0.50, 0.10, 0.10, 0.05, 0.05, 0.10],
        ];
        let m = ProbMatrix::new("only", rows).unwrap();
        let ranks = rank_probs(&m);
        let pred = uncertainty_ensemble(std::slice::from_ref(&m)).unwrap();
        assert_eq!(pred.avg_uncertainty, ranks.ranks);
    }

    #[test]
    fn majority_votes_and_tie_rule() {
        let mk = |id: &str, c: usize, p: f64| {
            let mut r = [(1.0 - p) / 7.0; 8];
            r[c] = p;
            ProbMatrix::new(id, vec![r]).unwrap()
        };
        let models = [mk("a", 0, 0.6), mk("b", 0, 0.5), mk("c", 5, 0.9)];
        assert_eq!(majority_ensemble(&models).unwrap(), vec![Angry]);
        let models = [mk("x", 0, 0.5), mk("y", 1, 0.9)];
        assert_eq!(majority_ensemble(&models).unwrap(), vec![Contempt]);
        let models = [mk("x", 3, 0.5), mk("x2", 3, 0.5)];
        assert_eq!(majority_ensemble(&models).unwrap(), vec![Fear]);
    }

    #[test]
    fn uniform_model_does_not_move_the_average() {
        let a = ProbMatrix::new("a", vec![[0.05, 0.05, 0.05, 0.05, 0.5, 0.1, 0.1, 0.1]]).unwrap();
        let u = ProbMatrix::new("u", vec![[0.125; 8]]).unwrap();
        assert_eq!(averaging_ensemble(&[a.clone(), u]).unwrap(), a.argmax_labels());
        assert_eq!(averaging_ensemble(&[a.clone(), a.clone()]).unwrap(), vec![Happy]);
    }

    #[test]
    fn validation_errors() {
        assert_eq!(uncertainty_ensemble(&[]).unwrap_err(), EnsembleError::NoModels);
        assert!(matches!(
            ProbMatrix::new("bad", vec![[0.2; 8]]),
            Err(EnsembleError::NotOnSimplex { .. })
        ));
        assert!(matches!(ProbMatrix::new("e", vec![]), Err(EnsembleError::Empty { .. })));
        let a = ProbMatrix::new("a", vec![[0.125; 8]]).unwrap();
        let b = ProbMatrix::new("b", vec![[0.125; 8]; 2]).unwrap();
        assert!(matches!(
            averaging_ensemble(&[a, b]),
            Err(EnsembleError::LengthMismatch { .. })
        ));
        assert_eq!("majority".parse::<Strategy>().unwrap(), Strategy::Majority);
        assert!("vote".parse::<Strategy>().is_err());
    }
}
