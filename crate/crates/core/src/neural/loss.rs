//! Training objectives: class-weighted cross-entropy against hard or soft
//! targets, and the concordance correlation coefficient.

use serde::{Deserialize, Serialize};

use super::NeuralError;
use crate::category::{Category, NUM_CATEGORIES};
use crate::tensor::{log_softmax, softmax};

pub const SOFT_TARGET_TOLERANCE: f64 = 1e-9;

/// A distribution over the eight categories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; NUM_CATEGORIES]", into = "[f64; NUM_CATEGORIES]")]
pub struct SoftTarget([f64; NUM_CATEGORIES]);

impl SoftTarget {
    pub fn new(dist: [f64; NUM_CATEGORIES]) -> Result<Self, NeuralError> {
        let sum: f64 = dist.iter().sum();
        if dist.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) || (sum - 1.0).abs() > SOFT_TARGET_TOLERANCE {
            return Err(NeuralError::OffSimplex(sum));
        }
        Ok(SoftTarget(dist))
    }

    pub fn one_hot(c: Category) -> Self {
        let mut d = [0.0; NUM_CATEGORIES];
        d[c.index()] = 1.0;
        SoftTarget(d)
    }

    pub fn dist(&self) -> &[f64; NUM_CATEGORIES] {
        &self.0
    }

    /// Most probable category, ties to the canonical order.
    pub fn argmax(&self) -> Category {
        crate::ensemble::argmax(&self.0)
    }
}

impl TryFrom<[f64; NUM_CATEGORIES]> for SoftTarget {
    type Error = NeuralError;
    fn try_from(d: [f64; NUM_CATEGORIES]) -> Result<Self, Self::Error> {
        SoftTarget::new(d)
    }
}

impl From<SoftTarget> for [f64; NUM_CATEGORIES] {
    fn from(t: SoftTarget) -> Self {
        t.0
    }
}

/// `-sum_c w_c q_c log softmax(z)_c` and its gradient with respect to `z`.
pub fn weighted_ce(logits: &[f64], target: &SoftTarget, weights: &[f64; NUM_CATEGORIES]) -> (f64, Vec<f64>) {
    debug_assert_eq!(logits.len(), NUM_CATEGORIES);
    let logp = log_softmax(logits);
    let p = softmax(logits);
    let q = target.dist();
    let loss = -(0..NUM_CATEGORIES).map(|c| weights[c] * q[c] * logp[c]).sum::<f64>();
    let s: f64 = (0..NUM_CATEGORIES).map(|c| weights[c] * q[c]).sum();
    let grad = (0..NUM_CATEGORIES).map(|j| p[j] * s - weights[j] * q[j]).collect();
    (loss, grad)
}

struct Moments {
    n: f64,
    mx: f64,
    my: f64,
    sxy: f64,
    den: f64,
}

fn moments(x: &[f64], y: &[f64]) -> Moments {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let vx = x.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>() / n;
    let vy = y.iter().map(|b| (b - my) * (b - my)).sum::<f64>() / n;
    let sxy = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / n;
    Moments {
        n,
        mx,
        my,
        sxy,
        den: vx + vy + (mx - my) * (mx - my),
    }
}

/// Concordance correlation coefficient with population moments. Identical
/// constant sequences give 1.
pub fn ccc(x: &[f64], y: &[f64]) -> Result<f64, NeuralError> {
    if x.len() != y.len() {
        return Err(NeuralError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(NeuralError::TooShort(x.len()));
    }
    let m = moments(x, y);
    Ok(if m.den == 0.0 { 1.0 } else { 2.0 * m.sxy / m.den })
}

/// `1 - ccc(pred, target)` and its gradient with respect to `pred`.
pub fn ccc_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>), NeuralError> {
    let rho = ccc(pred, target)?;
    let m = moments(pred, target);
    if m.den == 0.0 {
        return Ok((0.0, vec![0.0; pred.len()]));
    }
    let num = 2.0 * m.sxy;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(&x, &y)| {
            let dnum = 2.0 * (y - m.my) / m.n;
            let dden = 2.0 * (x - m.mx) / m.n + 2.0 * (m.mx - m.my) / m.n;
            -(dnum * m.den - num * dden) / (m.den * m.den)
        })
        .collect();
    Ok((1.0 - rho, grad))
}
