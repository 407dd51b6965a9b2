//! Stacked LSTM word encoder. The final hidden state of the top layer is the
//! sequence embedding; an empty sequence encodes to zeros.

use rand_chacha::ChaCha8Rng;

use super::layers::{join, uniform, Params};
use crate::tensor::{sigmoid, Tensor};

/// One layer. Gate rows are stacked `[input, forget, cell, output]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    pub w_ih: Tensor,
    pub w_hh: Tensor,
    pub b: Tensor,
}

#[derive(Debug, Clone)]
struct StepCache {
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmLayerCache {
    input: Tensor,
    steps: Vec<StepCache>,
}

impl LstmLayer {
    pub fn new(input: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        LstmLayer {
            w_ih: uniform(&[4 * hidden, input], bound, rng),
            w_hh: uniform(&[4 * hidden, hidden], bound, rng),
            b: Tensor::zeros(&[4 * hidden]),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.cols()
    }

    /// Returns all hidden states (`n x hidden`).
    pub fn forward(&self, x: &Tensor) -> (Tensor, LstmLayerCache) {
        let h = self.hidden();
        let n = x.rows();
        let mut out = Tensor::zeros(&[n, h]);
        let mut steps = Vec::with_capacity(n);
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        let xw = x.matmul_nt(&self.w_ih);
        for t in 0..n {
            let rec = self.w_hh.matvec(&h_prev);
            let z: Vec<f64> = (0..4 * h)
                .map(|k| xw.get(t, k) + rec[k] + self.b.data()[k])
                .collect();
            let i: Vec<f64> = z[..h].iter().map(|&v| sigmoid(v)).collect();
            let f: Vec<f64> = z[h..2 * h].iter().map(|&v| sigmoid(v)).collect();
            let g: Vec<f64> = z[2 * h..3 * h].iter().map(|&v| v.tanh()).collect();
            let o: Vec<f64> = z[3 * h..].iter().map(|&v| sigmoid(v)).collect();
            let c: Vec<f64> = (0..h).map(|j| f[j] * c_prev[j] + i[j] * g[j]).collect();
            let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
            let h_t: Vec<f64> = (0..h).map(|j| o[j] * tanh_c[j]).collect();
            out.row_mut(t).copy_from_slice(&h_t);
            steps.push(StepCache {
                h_prev: std::mem::replace(&mut h_prev, h_t),
                c_prev: std::mem::replace(&mut c_prev, c),
                i,
                f,
                g,
                o,
                tanh_c,
            });
        }
        (
            out,
            LstmLayerCache {
                input: x.clone(),
                steps,
            },
        )
    }

    /// Backpropagation through time. `dh` holds the loss gradient for every
    /// emitted hidden state; returns the gradient for every input row.
    pub fn backward(&self, cache: &LstmLayerCache, dh: &Tensor, grad: &mut LstmLayer) -> Tensor {
        let h = self.hidden();
        let n = cache.steps.len();
        let mut dz_all = Tensor::zeros(&[n, 4 * h]);
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        for t in (0..n).rev() {
            let s = &cache.steps[t];
            let dh_t: Vec<f64> = (0..h).map(|j| dh.get(t, j) + dh_next[j]).collect();
            let dz = dz_all.row_mut(t);
            let mut dc = vec![0.0; h];
            for j in 0..h {
                let dct = dh_t[j] * s.o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]) + dc_next[j];
                dc[j] = dct * s.f[j];
                dz[j] = dct * s.g[j] * s.i[j] * (1.0 - s.i[j]);
                dz[h + j] = dct * s.c_prev[j] * s.f[j] * (1.0 - s.f[j]);
                dz[2 * h + j] = dct * s.i[j] * (1.0 - s.g[j] * s.g[j]);
                dz[3 * h + j] = dh_t[j] * s.tanh_c[j] * s.o[j] * (1.0 - s.o[j]);
            }
            let dz = dz.to_vec();
            grad.w_hh.add_outer(&dz, &s.h_prev);
            dh_next = self.w_hh.matvec_t(&dz);
            dc_next = dc;
        }
        grad.w_ih.add_assign(&dz_all.matmul_tn(&cache.input));
        for t in 0..n {
            grad.b.data_mut().iter_mut().zip(dz_all.row(t)).for_each(|(g, d)| *g += d);
        }
        dz_all.matmul(&self.w_ih)
    }
}

impl Params for LstmLayer {
    fn params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Tensor)>) {
        out.push((join(prefix, "w_ih"), &self.w_ih));
        out.push((join(prefix, "w_hh"), &self.w_hh));
        out.push((join(prefix, "b"), &self.b));
    }

    fn params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Tensor>) {
        out.push(&mut self.w_ih);
        out.push(&mut self.w_hh);
        out.push(&mut self.b);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    pub layers: Vec<LstmLayer>,
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    layers: Vec<LstmLayerCache>,
}

impl Lstm {
    pub fn new(input: usize, hidden: usize, num_layers: usize, rng: &mut ChaCha8Rng) -> Self {
        let layers = (0..num_layers)
            .map(|l| LstmLayer::new(if l == 0 { input } else { hidden }, hidden, rng))
            .collect();
        Lstm { layers }
    }

    pub fn hidden(&self) -> usize {
        self.layers.last().map_or(0, LstmLayer::hidden)
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.w_ih.cols())
    }

    /// Final top-layer hidden state; zeros for an empty sequence.
    pub fn encode(&self, x: &Tensor) -> (Vec<f64>, LstmCache) {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for layer in &self.layers {
            let (out, cache) = layer.forward(&cur);
            caches.push(cache);
            cur = out;
        }
        let last = if cur.rows() == 0 || x.rows() == 0 {
            vec![0.0; self.hidden()]
        } else {
            cur.row(cur.rows() - 1).to_vec()
        };
        (last, LstmCache { layers: caches })
    }

    /// Gradient with respect to the input sequence.
    pub fn backward(&self, cache: &LstmCache, d_last: &[f64], grad: &mut Lstm) -> Tensor {
        let n = cache.layers.first().map_or(0, |c| c.steps.len());
        let mut dh = Tensor::zeros(&[n, self.hidden()]);
        if n == 0 {
            return Tensor::zeros(&[0, self.input_dim()]);
        }
        dh.row_mut(n - 1).copy_from_slice(d_last);
        for (l, layer) in self.layers.iter().enumerate().rev() {
            dh = layer.backward(&cache.layers[l], &dh, &mut grad.layers[l]);
        }
        dh
    }
}

impl Params for Lstm {
    fn params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Tensor)>) {
        for (l, layer) in self.layers.iter().enumerate() {
            layer.params(&join(prefix, &l.to_string()), out);
        }
    }

    fn params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Tensor>) {
        for layer in &mut self.layers {
            layer.params_mut(out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn empty_sequence_encodes_to_zeros() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let lstm = Lstm::new(42, 16, 2, &mut rng);
        let (h, cache) = lstm.encode(&Tensor::zeros(&[0, 42]));
        assert_eq!(h, vec![0.0; 16]);
        let mut g = lstm.clone();
        g.zero_grad();
        assert_eq!(lstm.backward(&cache, &h, &mut g).shape(), &[0, 42]);
    }

    #[test]
    fn zero_weights_and_inputs_are_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut lstm = Lstm::new(5, 4, 2, &mut rng);
        lstm.zero_grad();
        let (h, _) = lstm.encode(&Tensor::zeros(&[3, 5]));
        assert_eq!(h, vec![0.0; 4]);
    }
}
