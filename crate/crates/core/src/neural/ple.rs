//! Piecewise linear embedding of scalar features followed by a linear map.
//!
//! For edges `b_0 <= ... <= b_T`, component `t` of scalar `x` is
//! `clamp((x - b_{t-1}) / (b_t - b_{t-1}), 0, 1)`. A degenerate bin
//! (`b_{t-1} == b_t`) is a step: 1 when `x >= b_t`, else 0.

use rand_chacha::ChaCha8Rng;

use super::layers::{join, Linear, Params};
use super::NeuralError;
use crate::features::stats::quantile;
use crate::tensor::Tensor;

/// Fitted bin edges, one row of `T + 1` non-decreasing values per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct PleEdges {
    pub edges: Tensor,
}

impl PleEdges {
    /// Quantile edges at `t / T` from training rows.
    pub fn fit(rows: &[&[f64]], bins: usize) -> Result<Self, NeuralError> {
        let dim = rows.first().map_or(0, |r| r.len());
        if rows.is_empty() || bins == 0 {
            return Err(NeuralError::Unfitted("piecewise linear edges need data and at least one bin"));
        }
        let mut edges = Tensor::zeros(&[dim, bins + 1]);
        let mut col = Vec::with_capacity(rows.len());
        for f in 0..dim {
            col.clear();
            col.extend(rows.iter().map(|r| r[f]));
            let row = edges.row_mut(f);
            for (t, e) in row.iter_mut().enumerate() {
                *e = quantile(&col, t as f64 / bins as f64);
            }
            for t in 1..=bins {
                if row[t] < row[t - 1] {
                    row[t] = row[t - 1];
                }
            }
        }
        Ok(PleEdges { edges })
    }

    pub fn from_rows(edges: Vec<Vec<f64>>) -> Result<Self, NeuralError> {
        let cols = edges.first().map_or(0, Vec::len);
        if cols < 2 || edges.iter().any(|r| r.len() != cols || r.windows(2).any(|w| w[1] < w[0])) {
            return Err(NeuralError::Unfitted("edges must be non-decreasing rows of equal length >= 2"));
        }
        Ok(PleEdges {
            edges: Tensor::from_rows(&edges, cols),
        })
    }

    pub fn features(&self) -> usize {
        self.edges.rows()
    }

    pub fn bins(&self) -> usize {
        self.edges.cols() - 1
    }

    /// Components and their derivatives with respect to each input scalar.
    pub fn encode(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let t = self.bins();
        let mut z = Vec::with_capacity(x.len() * t);
        let mut dz = Vec::with_capacity(x.len() * t);
        for (f, &v) in x.iter().enumerate() {
            let e = self.edges.row(f);
            for k in 1..=t {
                let (lo, hi) = (e[k - 1], e[k]);
                if hi > lo {
                    let u = (v - lo) / (hi - lo);
                    if u <= 0.0 {
                        z.push(0.0);
                        dz.push(0.0);
                    } else if u >= 1.0 {
                        z.push(1.0);
                        dz.push(0.0);
                    } else {
                        z.push(u);
                        dz.push(1.0 / (hi - lo));
                    }
                } else {
                    z.push(if v >= hi { 1.0 } else { 0.0 });
                    dz.push(0.0);
                }
            }
        }
        (z, dz)
    }
}

/// Piecewise linear embedding plus a linear map to the utterance hidden size.
#[derive(Debug, Clone, PartialEq)]
pub struct Ple {
    pub linear: Linear,
    pub bins: usize,
}

#[derive(Debug, Clone)]
pub struct PleCache {
    z: Vec<f64>,
    dz: Vec<f64>,
}

impl Ple {
    pub fn new(features: usize, bins: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        Ple {
            linear: Linear::new(features * bins, hidden, rng),
            bins,
        }
    }

    pub fn features(&self) -> usize {
        self.linear.input_dim() / self.bins.max(1)
    }

    pub fn forward(&self, edges: &PleEdges, x: &[f64]) -> Result<(Vec<f64>, PleCache), NeuralError> {
        if x.len() != edges.features() || x.len() != self.features() || edges.bins() != self.bins {
            return Err(NeuralError::Dimension {
                what: "utterance features",
                expected: self.features(),
                found: x.len(),
            });
        }
        let (z, dz) = edges.encode(x);
        Ok((self.linear.forward(&z), PleCache { z, dz }))
    }

    /// Returns the gradient with respect to the raw scalars.
    pub fn backward(&self, cache: &PleCache, dy: &[f64], grad: &mut Ple) -> Vec<f64> {
        let dz = self.linear.backward(&cache.z, dy, &mut grad.linear);
        let t = self.bins;
        (0..self.features())
            .map(|f| (0..t).map(|k| dz[f * t + k] * cache.dz[f * t + k]).sum())
            .collect()
    }
}

impl Params for Ple {
    fn params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Tensor)>) {
        self.linear.params(&join(prefix, "linear"), out);
    }

    fn params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Tensor>) {
        self.linear.params_mut(out);
    }
}
