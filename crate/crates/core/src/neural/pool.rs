//! Attentive statistics pooling: frame weights `a = softmax_f(v . tanh(W h_f + b))`,
//! output `[sum a_f h_f || sqrt(sum a_f (h_f - mu)^2)]` with the deviation
//! floored at [`STD_FLOOR`].

use rand_chacha::ChaCha8Rng;

use super::layers::{join, uniform, Params};
use super::NeuralError;
use crate::tensor::{softmax, softmax_backward, Tensor};

pub const STD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct AttentivePool {
    pub w: Tensor,
    pub b: Tensor,
    pub v: Tensor,
}

#[derive(Debug, Clone)]
pub struct PoolCache {
    frames: Tensor,
    u: Tensor,
    pub weights: Vec<f64>,
    mu: Vec<f64>,
    sigma: Vec<f64>,
    floored: Vec<bool>,
}

impl AttentivePool {
    pub fn new(dim: usize, attn_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        AttentivePool {
            w: uniform(&[attn_dim, dim], 1.0 / (dim as f64).sqrt(), rng),
            b: Tensor::zeros(&[attn_dim]),
            v: uniform(&[attn_dim], 1.0 / (attn_dim as f64).sqrt(), rng),
        }
    }

    pub fn dim(&self) -> usize {
        self.w.cols()
    }

    pub fn forward(&self, frames: &Tensor) -> Result<(Vec<f64>, PoolCache), NeuralError> {
        let (f, d) = (frames.rows(), frames.cols());
        if f == 0 || frames.is_empty() {
            return Err(NeuralError::EmptySequence("attentive pooling needs at least one frame"));
        }
        if d != self.dim() {
            return Err(NeuralError::Dimension {
                what: "pooled frames",
                expected: self.dim(),
                found: d,
            });
        }
        let mut u = frames.matmul_nt(&self.w);
        let mut scores = Vec::with_capacity(f);
        for r in 0..f {
            let row = u.row_mut(r);
            for (x, b) in row.iter_mut().zip(self.b.data()) {
                *x = (*x + b).tanh();
            }
            scores.push(crate::tensor::dot(row, self.v.data()));
        }
        let weights = softmax(&scores);
        let mut mu = vec![0.0; d];
        for (r, &a) in weights.iter().enumerate() {
            mu.iter_mut().zip(frames.row(r)).for_each(|(m, h)| *m += a * h);
        }
        let mut var = vec![0.0; d];
        for (r, &a) in weights.iter().enumerate() {
            var.iter_mut()
                .zip(frames.row(r))
                .zip(&mu)
                .for_each(|((s, h), m)| *s += a * (h - m) * (h - m));
        }
        let sigma: Vec<f64> = var.iter().map(|v| v.sqrt().max(STD_FLOOR)).collect();
        let floored = var.iter().map(|v| v.sqrt() <= STD_FLOOR).collect();
        let mut out = mu.clone();
        out.extend_from_slice(&sigma);
        Ok((
            out,
            PoolCache {
                frames: frames.clone(),
                u,
                weights,
                mu,
                sigma,
                floored,
            },
        ))
    }

    /// Gradient with respect to the frames.
    pub fn backward(&self, cache: &PoolCache, dout: &[f64], grad: &mut AttentivePool) -> Tensor {
        let frames = &cache.frames;
        let (f, d) = (frames.rows(), frames.cols());
        let dmu = &dout[..d];
        let dvar: Vec<f64> = (0..d)
            .map(|j| if cache.floored[j] { 0.0 } else { dout[d + j] / (2.0 * cache.sigma[j]) })
            .collect();
        let mut dframes = Tensor::zeros(&[f, d]);
        let mut da = vec![0.0; f];
        for r in 0..f {
            let h = frames.row(r);
            let a = cache.weights[r];
            let mut acc = 0.0;
            for (j, o) in dframes.row_mut(r).iter_mut().enumerate() {
                let c = h[j] - cache.mu[j];
                *o = a * dmu[j] + dvar[j] * 2.0 * a * c;
                acc += dmu[j] * h[j] + dvar[j] * c * c;
            }
            da[r] = acc;
        }
        let ds = softmax_backward(&cache.weights, &da);
        for r in 0..f {
            let u = cache.u.row(r);
            let dpre: Vec<f64> = u
                .iter()
                .zip(self.v.data())
                .map(|(&uk, &vk)| ds[r] * vk * (1.0 - uk * uk))
                .collect();
            grad.v.data_mut().iter_mut().zip(u).for_each(|(g, &uk)| *g += ds[r] * uk);
            grad.w.add_outer(&dpre, frames.row(r));
            grad.b.data_mut().iter_mut().zip(&dpre).for_each(|(g, d)| *g += d);
            let dh = self.w.matvec_t(&dpre);
            dframes.row_mut(r).iter_mut().zip(dh).for_each(|(o, d)| *o += d);
        }
        dframes
    }
}

impl Params for AttentivePool {
    fn params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Tensor)>) {
        out.push((join(prefix, "w"), &self.w));
        out.push((join(prefix, "b"), &self.b));
        out.push((join(prefix, "v"), &self.v));
    }

    fn params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Tensor>) {
        out.push(&mut self.w);
        out.push(&mut self.b);
        out.push(&mut self.v);
    }
}
