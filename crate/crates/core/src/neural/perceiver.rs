//! Latent-array fusion of several embedding sources.
//!
//! Every source is projected to width `D` and its frames become tokens. A
//! learned `L x D` latent array then runs through one post-norm block
//!
//! ```text
//! Z <- LN(Z + CrossAttn(Z, X))
//! Z <- LN(Z + SelfAttn(Z, Z))
//! Z <- LN(Z + FF(Z))
//! ```
//!
//! `passes` times with shared weights, and the output is the mean latent row.
//! There is no positional encoding, so token order does not matter.

use rand_chacha::ChaCha8Rng;

use super::layers::{join, uniform, Attention, AttentionCache, FeedForward, FeedForwardCache, LayerNorm, LayerNormCache, Linear, Params};
use super::NeuralError;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct PerceiverBlock {
    pub cross: Attention,
    pub ln1: LayerNorm,
    pub self_attn: Attention,
    pub ln2: LayerNorm,
    pub ff: FeedForward,
    pub ln3: LayerNorm,
}

#[derive(Debug, Clone)]
struct PassCache {
    z_in: Tensor,
    cross: AttentionCache,
    ln1: LayerNormCache,
    z1: Tensor,
    self_attn: AttentionCache,
    ln2: LayerNormCache,
    z2: Tensor,
    ff: FeedForwardCache,
    ln3: LayerNormCache,
}

impl PerceiverBlock {
    pub fn new(dim: usize, ff_hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        PerceiverBlock {
            cross: Attention::new(dim, dim, dim, rng),
            ln1: LayerNorm::new(dim),
            self_attn: Attention::new(dim, dim, dim, rng),
            ln2: LayerNorm::new(dim),
            ff: FeedForward::new(dim, ff_hidden, rng),
            ln3: LayerNorm::new(dim),
        }
    }

    fn forward(&self, z: &Tensor, x: &Tensor) -> (Tensor, PassCache) {
        let (c, cross) = self.cross.forward(z, x);
        let mut r1 = z.clone();
        r1.add_assign(&c);
        let (z1, ln1) = self.ln1.forward(&r1);
        let (s, self_attn) = self.self_attn.forward(&z1, &z1);
        let mut r2 = z1.clone();
        r2.add_assign(&s);
        let (z2, ln2) = self.ln2.forward(&r2);
        let (f, ff) = self.ff.forward(&z2);
        let mut r3 = z2.clone();
        r3.add_assign(&f);
        let (z3, ln3) = self.ln3.forward(&r3);
        (
            z3,
            PassCache {
                z_in: z.clone(),
                cross,
                ln1,
                z1,
                self_attn,
                ln2,
                z2,
                ff,
                ln3,
            },
        )
    }

    /// Returns gradients for the incoming latents and the tokens.
    fn backward(&self, x: &Tensor, cache: &PassCache, dz3: &Tensor, grad: &mut PerceiverBlock) -> (Tensor, Tensor) {
        let dr3 = self.ln3.backward(&cache.ln3, dz3, &mut grad.ln3);
        let mut dz2 = self.ff.backward(&cache.z2, &cache.ff, &dr3, &mut grad.ff);
        dz2.add_assign(&dr3);
        let dr2 = self.ln2.backward(&cache.ln2, &dz2, &mut grad.ln2);
        let (dq, dk) = self
            .self_attn
            .backward(&cache.z1, &cache.z1, &cache.self_attn, &dr2, &mut grad.self_attn);
        let mut dz1 = dr2;
        dz1.add_assign(&dq);
        dz1.add_assign(&dk);
        let dr1 = self.ln1.backward(&cache.ln1, &dz1, &mut grad.ln1);
        let (dq, dx) = self.cross.backward(&cache.z_in, x, &cache.cross, &dr1, &mut grad.cross);
        let mut dz = dr1;
        dz.add_assign(&dq);
        (dz, dx)
    }
}

impl Params for PerceiverBlock {
    fn params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Tensor)>) {
        self.cross.params(&join(prefix, "cross"), out);
        self.ln1.params(&join(prefix, "ln1"), out);
        self.self_attn.params(&join(prefix, "self_attn"), out);
        self.ln2.params(&join(prefix, "ln2"), out);
        self.ff.params(&join(prefix, "ff"), out);
        self.ln3.params(&join(prefix, "ln3"), out);
    }

    fn params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Tensor>) {
        self.cross.params_mut(out);
        self.ln1.params_mut(out);
        self.self_attn.params_mut(out);
        self.ln2.params_mut(out);
        self.ff.params_mut(out);
        self.ln3.params_mut(out);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perceiver {
    /// Source names, sorted; `proj[i]` projects `sources[i]`.
    pub sources: Vec<String>,
    pub proj: Vec<Linear>,
    pub latents: Tensor,
    pub block: PerceiverBlock,
    pub passes: usize,
}

#[derive(Debug, Clone)]
pub struct PerceiverCache {
    /// `(source index, raw frames, token row offset)` for every present source.
    inputs: Vec<(usize, Tensor, usize)>,
    tokens: Tensor,
    passes: Vec<PassCache>,
}

impl PerceiverCache {
    /// Cross-attention weights of the first pass (`L x tokens`).
    pub fn cross_weights(&self) -> Option<&Tensor> {
        self.passes.first().map(|p| &p.cross.weights)
    }
}

impl Perceiver {
    pub fn new(
        sources: &[(String, usize)],
        latent_len: usize,
        dim: usize,
        ff_hidden: usize,
        passes: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut sorted = sources.to_vec();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        let proj = sorted.iter().map(|(_, d)| Linear::new(*d, dim, rng)).collect();
        Perceiver {
            sources: sorted.into_iter().map(|(n, _)| n).collect(),
            proj,
            latents: uniform(&[latent_len, dim], 1.0, rng),
            block: PerceiverBlock::new(dim, ff_hidden, rng),
            passes,
        }
    }

    pub fn dim(&self) -> usize {
        self.latents.cols()
    }

    /// `inputs[i]` holds the frames of `sources[i]`, or `None` when the sample
    /// lacks that source. With no source present the output is zero.
    pub fn forward(&self, inputs: &[Option<&Tensor>]) -> Result<(Vec<f64>, Option<PerceiverCache>), NeuralError> {
        assert_eq!(inputs.len(), self.sources.len(), "one slot per source");
        let d = self.dim();
        let mut present = Vec::new();
        let mut projected = Vec::new();
        let mut offset = 0;
        for (i, x) in inputs.iter().enumerate() {
            let Some(x) = x else { continue };
            if x.rows() == 0 || x.is_empty() {
                continue;
            }
            if x.cols() != self.proj[i].input_dim() {
                return Err(NeuralError::Dimension {
                    what: "embedding source",
                    expected: self.proj[i].input_dim(),
                    found: x.cols(),
                });
            }
            projected.push(self.proj[i].forward_rows(x));
            present.push((i, (*x).clone(), offset));
            offset += x.rows();
        }
        if present.is_empty() {
            return Ok((vec![0.0; d], None));
        }
        let refs: Vec<&Tensor> = projected.iter().collect();
        let tokens = Tensor::vstack(&refs, d);
        let mut z = self.latents.clone();
        let mut passes = Vec::with_capacity(self.passes);
        for _ in 0..self.passes {
            let (next, cache) = self.block.forward(&z, &tokens);
            passes.push(cache);
            z = next;
        }
        let l = z.rows() as f64;
        let mut out = vec![0.0; d];
        for r in 0..z.rows() {
            out.iter_mut().zip(z.row(r)).for_each(|(o, v)| *o += v / l);
        }
        Ok((
            out,
            Some(PerceiverCache {
                inputs: present,
                tokens,
                passes,
            }),
        ))
    }

    /// Gradients for each present source's frames, keyed by source index.
    pub fn backward(&self, cache: &PerceiverCache, dout: &[f64], grad: &mut Perceiver) -> Vec<(usize, Tensor)> {
        let (l, d) = (self.latents.rows(), self.dim());
        let mut dz = Tensor::zeros(&[l, d]);
        for r in 0..l {
            dz.row_mut(r).iter_mut().zip(dout).for_each(|(o, g)| *o = g / l as f64);
        }
        let mut dtokens = cache.tokens.zeros_like();
        for pass in cache.passes.iter().rev() {
            let (dprev, dx) = self.block.backward(&cache.tokens, pass, &dz, &mut grad.block);
            dtokens.add_assign(&dx);
            dz = dprev;
        }
        grad.latents.add_assign(&dz);
        cache
            .inputs
            .iter()
            .map(|(i, x, off)| {
                let rows: Vec<&[f64]> = (*off..off + x.rows()).map(|r| dtokens.row(r)).collect();
                let dy = Tensor::from_rows(&rows, d);
                (*i, self.proj[*i].backward_rows(x, &dy, &mut grad.proj[*i]))
            })
            .collect()
    }
}

impl Params for Perceiver {
    fn params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Tensor)>) {
        for (name, p) in self.sources.iter().zip(&self.proj) {
            p.params(&join(prefix, &format!("proj.{name}")), out);
        }
        out.push((join(prefix, "latents"), &self.latents));
        self.block.params(&join(prefix, "block"), out);
    }

    fn params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Tensor>) {
        for p in &mut self.proj {
            p.params_mut(out);
        }
        out.push(&mut self.latents);
        self.block.params_mut(out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn setup() -> (Perceiver, Tensor, Tensor) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = Perceiver::new(&[("b".into(), 3), ("a".into(), 4)], 4, 6, 8, 2, &mut rng);
        let a = uniform(&[3, 4], 1.0, &mut rng);
        let b = uniform(&[2, 3], 1.0, &mut rng);
        (p, a, b)
    }

    #[test]
    fn sources_are_sorted_and_attention_is_stochastic() {
        let (p, a, b) = setup();
        assert_eq!(p.sources, vec!["a".to_string(), "b".to_string()]);
        let (out, cache) = p.forward(&[Some(&a), Some(&b)]).unwrap();
        assert_eq!(out.len(), 6);
        let w = cache.unwrap().cross_weights().unwrap().clone();
        assert_eq!(w.shape(), &[4, 5]);
        for r in 0..4 {
            assert!((w.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn token_order_does_not_matter() {
        let (p, a, b) = setup();
        let (out, _) = p.forward(&[Some(&a), Some(&b)]).unwrap();
        let rev: Vec<&[f64]> = (0..3).rev().map(|r| a.row(r)).collect();
        let a_rev = Tensor::from_rows(&rev, 4);
        let (out2, _) = p.forward(&[Some(&a_rev), Some(&b)]).unwrap();
        for (x, y) in out.iter().zip(&out2) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn no_sources_gives_zeros() {
        let (p, _, _) = setup();
        let (out, cache) = p.forward(&[None, None]).unwrap();
        assert_eq!(out, vec![0.0; 6]);
        assert!(cache.is_none());
    }
}
