//! Evaluation metrics: Macro-F1 and accuracy for categories, concordance
//! correlation for attributes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::category::{Category, NUM_CATEGORIES};
use crate::neural::ccc;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("prediction/gold length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("need at least 2 rows for CCC, got {0}")]
    TooFew(usize),
}

/// `confusion[gold][pred]` counts.
pub fn confusion_matrix(preds: &[Category], golds: &[Category]) -> Result<[[usize; NUM_CATEGORIES]; NUM_CATEGORIES], MetricError> {
    if preds.len() != golds.len() {
        return Err(MetricError::LengthMismatch(preds.len(), golds.len()));
    }
    if preds.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut cm = [[0usize; NUM_CATEGORIES]; NUM_CATEGORIES];
    for (p, g) in preds.iter().zip(golds) {
        cm[g.index()][p.index()] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Per-class scores plus Macro-F1 and accuracy (both in percent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub per_class: BTreeMap<String, ClassScores>,
    pub macro_f1: f64,
    pub accuracy: f64,
}

fn class_scores(cm: &[[usize; NUM_CATEGORIES]; NUM_CATEGORIES], c: usize) -> ClassScores {
    let tp = cm[c][c] as f64;
    let support: usize = cm[c].iter().sum();
    let predicted: usize = cm.iter().map(|row| row[c]).sum();
    let precision = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
    let recall = if support == 0 { 0.0 } else { tp / support as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassScores {
        precision,
        recall,
        f1,
        support,
    }
}

/// Unweighted mean F1 over the classes present among the golds, in percent.
/// A class that is never predicted contributes F1 = 0.
pub fn macro_f1(preds: &[Category], golds: &[Category]) -> Result<f64, MetricError> {
    let cm = confusion_matrix(preds, golds)?;
    let scores: Vec<f64> = (0..NUM_CATEGORIES)
        .map(|c| class_scores(&cm, c))
        .filter(|s| s.support > 0)
        .map(|s| s.f1)
        .collect();
    Ok(100.0 * scores.iter().sum::<f64>() / scores.len() as f64)
}

pub fn accuracy(preds: &[Category], golds: &[Category]) -> Result<f64, MetricError> {
    if preds.len() != golds.len() {
        return Err(MetricError::LengthMismatch(preds.len(), golds.len()));
    }
    if preds.is_empty() {
        return Err(MetricError::Empty);
    }
    let correct = preds.iter().zip(golds).filter(|(p, g)| p == g).count();
    Ok(100.0 * correct as f64 / preds.len() as f64)
}

pub fn classification_report(preds: &[Category], golds: &[Category]) -> Result<ClassificationReport, MetricError> {
    let cm = confusion_matrix(preds, golds)?;
    let per_class = Category::ALL
        .iter()
        .map(|c| (c.code().to_string(), class_scores(&cm, c.index())))
        .collect();
    Ok(ClassificationReport {
        per_class,
        macro_f1: macro_f1(preds, golds)?,
        accuracy: accuracy(preds, golds)?,
    })
}

/// CCC for valence, arousal and dominance plus their arithmetic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeReport {
    pub valence: f64,
    pub arousal: f64,
    pub dominance: f64,
    pub mean: f64,
}

/// Column-wise CCC of `m x 3` matrices ordered (valence, arousal, dominance).
pub fn ccc_eval(preds: &[[f64; 3]], golds: &[[f64; 3]]) -> Result<AttributeReport, MetricError> {
    if preds.len() != golds.len() {
        return Err(MetricError::LengthMismatch(preds.len(), golds.len()));
    }
    if preds.len() < 2 {
        return Err(MetricError::TooFew(preds.len()));
    }
    let col = |m: &[[f64; 3]], d: usize| m.iter().map(|r| r[d]).collect::<Vec<_>>();
    let mut v = [0.0; 3];
    for (d, out) in v.iter_mut().enumerate() {
        *out = ccc(&col(preds, d), &col(golds, d)).expect("lengths checked");
    }
    Ok(AttributeReport {
        valence: v[0],
        arousal: v[1],
        dominance: v[2],
        mean: (v[0] + v[1] + v[2]) / 3.0,
    })
}
