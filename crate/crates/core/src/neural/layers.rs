//! Dense building blocks. Every block's gradient container is a value of
//! the same type, so `backward` accumulates into `grad: &mut Self`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::tensor::{softmax, softmax_backward, Tensor};

/// Collects named parameter tensors in a fixed order.
pub trait Params {
    fn params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Tensor)>);
    fn params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Tensor>);

    fn zero_grad(&mut self) {
        let mut ts = Vec::new();
        self.params_mut(&mut ts);
        ts.into_iter().for_each(|t| t.fill(0.0));
    }

    /// `self += other`, tensor by tensor. Both must share one structure.
    fn accumulate(&mut self, other: &Self)
    where
        Self: Sized,
    {
        let mut dst = Vec::new();
        self.params_mut(&mut dst);
        let mut src = Vec::new();
        other.params("", &mut src);
        assert_eq!(dst.len(), src.len(), "parameter structures differ");
        for (d, (_, s)) in dst.into_iter().zip(src) {
            d.add_assign(s);
        }
    }

    fn num_params(&self) -> usize {
        let mut ts = Vec::new();
        self.params("", &mut ts);
        ts.iter().map(|(_, t)| t.len()).sum()
    }
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

pub(crate) fn uniform(shape: &[usize], bound: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let mut t = Tensor::zeros(shape);
    if bound > 0.0 {
        t.data_mut().iter_mut().for_each(|v| *v = rng.gen_range(-bound..bound));
    }
    t
}

/// `y = W x + b` with `W: out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Tensor,
    pub b: Tensor,
}

impl Linear {
    /// Weights uniform in `±1/sqrt(in)`, zero bias.
    pub fn new(input: usize, output: usize, rng: &mut ChaCha8Rng) -> Self {
        Linear {
            w: uniform(&[output, input], 1.0 / (input.max(1) as f64).sqrt(), rng),
            b: Tensor::zeros(&[output]),
        }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Linear {
            w: Tensor::zeros(&[output, input]),
            b: Tensor::zeros(&[output]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.w.matvec(x);
        y.iter_mut().zip(self.b.data()).for_each(|(y, b)| *y += b);
        y
    }

    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Linear) -> Vec<f64> {
        grad.w.add_outer(dy, x);
        grad.b.data_mut().iter_mut().zip(dy).for_each(|(g, d)| *g += d);
        self.w.matvec_t(dy)
    }

    /// Row-wise application to an `n x in` matrix.
    pub fn forward_rows(&self, x: &Tensor) -> Tensor {
        let mut y = x.matmul_nt(&self.w);
        let m = y.cols();
        for r in 0..y.rows() {
            y.row_mut(r).iter_mut().zip(self.b.data()).for_each(|(y, b)| *y += b);
        }
        debug_assert_eq!(m, self.output_dim());
        y
    }

    pub fn backward_rows(&self, x: &Tensor, dy: &Tensor, grad: &mut Linear) -> Tensor {
        grad.w.add_assign(&dy.matmul_tn(x));
        for r in 0..dy.rows() {
            grad.b.data_mut().iter_mut().zip(dy.row(r)).for_each(|(g, d)| *g += d);
        }
        dy.matmul(&self.w)
    }
}

impl Params for Linear {
    fn params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Tensor)>) {
        out.push((join(prefix, "w"), &self.w));
        out.push((join(prefix, "b"), &self.b));
    }

    fn params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Tensor>) {
        out.push(&mut self.w);
        out.push(&mut self.b);
    }
}

pub const LAYER_NORM_EPS: f64 = 1e-10;

/// Row-wise layer normalisation with affine `gamma`, `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gamma: Tensor,
    pub beta: Tensor,
}

#[derive(Debug, Clone)]
pub struct LayerNormCache {
    /// Pre-affine normalised rows.
    pub xhat: Tensor,
    inv_std: Vec<f64>,
}

impl LayerNorm {
    pub fn new(dim: usize) -> Self {
        let mut gamma = Tensor::zeros(&[dim]);
        gamma.fill(1.0);
        LayerNorm {
            gamma,
            beta: Tensor::zeros(&[dim]),
        }
    }

    pub fn forward(&self, x: &Tensor) -> (Tensor, LayerNormCache) {
        let d = x.cols();
        let mut xhat = x.clone();
        let mut y = x.clone();
        let mut inv_std = Vec::with_capacity(x.rows());
        for r in 0..x.rows() {
            let row = x.row(r);
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let is = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            inv_std.push(is);
            for (i, h) in xhat.row_mut(r).iter_mut().enumerate() {
                *h = (row[i] - mean) * is;
            }
            let hr = xhat.row(r).to_vec();
            for (i, o) in y.row_mut(r).iter_mut().enumerate() {
                *o = self.gamma.data()[i] * hr[i] + self.beta.data()[i];
            }
        }
        (y, LayerNormCache { xhat, inv_std })
    }

    pub fn backward(&self, cache: &LayerNormCache, dy: &Tensor, grad: &mut LayerNorm) -> Tensor {
        let d = dy.cols();
        let mut dx = dy.zeros_like();
        for r in 0..dy.rows() {
            let xh = cache.xhat.row(r);
            let g = dy.row(r);
            let mut dxh = vec![0.0; d];
            for i in 0..d {
                grad.gamma.data_mut()[i] += g[i] * xh[i];
                grad.beta.data_mut()[i] += g[i];
                dxh[i] = g[i] * self.gamma.data()[i];
            }
            let m1 = dxh.iter().sum::<f64>() / d as f64;
            let m2 = dxh.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / d as f64;
            for (i, o) in dx.row_mut(r).iter_mut().enumerate() {
                *o = cache.inv_std[r] * (dxh[i] - m1 - xh[i] * m2);
            }
        }
        dx
    }
}

impl Params for LayerNorm {
    fn params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Tensor)>) {
        out.push((join(prefix, "gamma"), &self.gamma));
        out.push((join(prefix, "beta"), &self.beta));
    }

    fn params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Tensor>) {
        out.push(&mut self.gamma);
        out.push(&mut self.beta);
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

/// GELU, tanh approximation.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

pub fn gelu_grad(x: f64) -> f64 {
    let u = GELU_C * (x + 0.044715 * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
}

/// Two-layer position-wise MLP with GELU.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedForward {
    pub fc1: Linear,
    pub fc2: Linear,
}

#[derive(Debug, Clone)]
pub struct FeedForwardCache {
    pre: Tensor,
    act: Tensor,
}

impl FeedForward {
    pub fn new(dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        FeedForward {
            fc1: Linear::new(dim, hidden, rng),
            fc2: Linear::new(hidden, dim, rng),
        }
    }

    pub fn forward(&self, x: &Tensor) -> (Tensor, FeedForwardCache) {
        let pre = self.fc1.forward_rows(x);
        let mut act = pre.clone();
        act.data_mut().iter_mut().for_each(|v| *v = gelu(*v));
        let y = self.fc2.forward_rows(&act);
        (y, FeedForwardCache { pre, act })
    }

    pub fn backward(&self, x: &Tensor, cache: &FeedForwardCache, dy: &Tensor, grad: &mut FeedForward) -> Tensor {
        let mut dact = self.fc2.backward_rows(&cache.act, dy, &mut grad.fc2);
        dact.data_mut()
            .iter_mut()
            .zip(cache.pre.data())
            .for_each(|(d, &p)| *d *= gelu_grad(p));
        self.fc1.backward_rows(x, &dact, &mut grad.fc1)
    }
}

impl Params for FeedForward {
    fn params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Tensor)>) {
        self.fc1.params(&join(prefix, "fc1"), out);
        self.fc2.params(&join(prefix, "fc2"), out);
    }

    fn params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Tensor>) {
        self.fc1.params_mut(out);
        self.fc2.params_mut(out);
    }
}

/// Single-head scaled dot-product attention with bias-free query, key and
/// value projections and a biased output projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    pub wq: Tensor,
    pub wk: Tensor,
    pub wv: Tensor,
    pub out: Linear,
}

#[derive(Debug, Clone)]
pub struct AttentionCache {
    q: Tensor,
    k: Tensor,
    v: Tensor,
    /// Row-stochastic attention weights, `queries x keys`.
    pub weights: Tensor,
    o: Tensor,
}

impl Attention {
    pub fn new(query_dim: usize, key_dim: usize, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let bq = 1.0 / (query_dim as f64).sqrt();
        let bk = 1.0 / (key_dim as f64).sqrt();
        Attention {
            wq: uniform(&[dim, query_dim], bq, rng),
            wk: uniform(&[dim, key_dim], bk, rng),
            wv: uniform(&[dim, key_dim], bk, rng),
            out: Linear::new(dim, dim, rng),
        }
    }

    fn scale(&self) -> f64 {
        1.0 / (self.wq.rows() as f64).sqrt()
    }

    pub fn forward(&self, xq: &Tensor, xk: &Tensor) -> (Tensor, AttentionCache) {
        let q = xq.matmul_nt(&self.wq);
        let k = xk.matmul_nt(&self.wk);
        let v = xk.matmul_nt(&self.wv);
        let mut weights = q.matmul_nt(&k);
        let s = self.scale();
        for r in 0..weights.rows() {
            let row: Vec<f64> = weights.row(r).iter().map(|x| x * s).collect();
            weights.row_mut(r).copy_from_slice(&softmax(&row));
        }
        let o = weights.matmul(&v);
        let y = self.out.forward_rows(&o);
        (y, AttentionCache { q, k, v, weights, o })
    }

    /// Returns gradients for the query and key/value inputs.
    pub fn backward(
        &self,
        xq: &Tensor,
        xk: &Tensor,
        cache: &AttentionCache,
        dy: &Tensor,
        grad: &mut Attention,
    ) -> (Tensor, Tensor) {
        let d_o = self.out.backward_rows(&cache.o, dy, &mut grad.out);
        let d_weights = d_o.matmul_nt(&cache.v);
        let dv = cache.weights.matmul_tn(&d_o);
        let mut ds = d_weights.zeros_like();
        let s = self.scale();
        for r in 0..ds.rows() {
            let g = softmax_backward(cache.weights.row(r), d_weights.row(r));
            ds.row_mut(r).iter_mut().zip(g).for_each(|(o, g)| *o = g * s);
        }
        let dq = ds.matmul(&cache.k);
        let dk = ds.matmul_tn(&cache.q);
        grad.wq.add_assign(&dq.matmul_tn(xq));
        grad.wk.add_assign(&dk.matmul_tn(xk));
        grad.wv.add_assign(&dv.matmul_tn(xk));
        let dxq = dq.matmul(&self.wq);
        let mut dxk = dk.matmul(&self.wk);
        dxk.add_assign(&dv.matmul(&self.wv));
        (dxq, dxk)
    }
}

impl Params for Attention {
    fn params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Tensor)>) {
        out.push((join(prefix, "wq"), &self.wq));
        out.push((join(prefix, "wk"), &self.wk));
        out.push((join(prefix, "wv"), &self.wv));
        self.out.params(&join(prefix, "out"), out);
    }

    fn params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Tensor>) {
        out.push(&mut self.wq);
        out.push(&mut self.wk);
        out.push(&mut self.wv);
        self.out.params_mut(out);
    }
}
