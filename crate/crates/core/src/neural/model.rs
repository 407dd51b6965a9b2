//! The composed network: word LSTM, utterance PLE, embedding fusion and a
//! linear head over `[embedding || word || utterance]`. A level that is
//! disabled in the config has no slot; a level the sample lacks is fed zeros.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{join, Linear, Params};
use super::lstm::{Lstm, LstmCache};
use super::perceiver::{Perceiver, PerceiverCache};
use super::ple::{Ple, PleCache, PleEdges};
use super::pool::{AttentivePool, PoolCache};
use super::NeuralError;
use crate::category::NUM_CATEGORIES;
use crate::features::{FeatureBundle, WORD_DIM};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Categorical,
    Attributes,
}

impl Task {
    pub fn output_dim(self) -> usize {
        match self {
            Task::Categorical => NUM_CATEGORIES,
            Task::Attributes => 3,
        }
    }
}

impl std::str::FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "categorical" => Ok(Task::Categorical),
            "attributes" => Ok(Task::Attributes),
            other => Err(format!("unknown task {other:?} (expected categorical or attributes)")),
        }
    }
}

/// Architecture hyper-parameters. [`ModelConfig::full`] holds the full-size
/// preset; [`ModelConfig::desk`] a small one for CPU experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub task: Task,
    pub use_word: bool,
    pub word_dim: usize,
    pub word_hidden: usize,
    pub lstm_layers: usize,
    /// Length of the utterance vector; 0 disables the utterance level.
    pub utterance_dim: usize,
    pub ple_bins: usize,
    pub utterance_hidden: usize,
    /// Embedding sources `(name, width)`. One source is pooled with
    /// attentive statistics; two or more are fused by the Perceiver.
    pub sources: Vec<(String, usize)>,
    pub pool_hidden: usize,
    pub latent_len: usize,
    pub latent_dim: usize,
    pub ff_hidden: usize,
    pub perceiver_passes: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::full(Task::Categorical, 0, Vec::new())
    }
}

impl ModelConfig {
    pub fn full(task: Task, utterance_dim: usize, sources: Vec<(String, usize)>) -> Self {
        ModelConfig {
            task,
            use_word: true,
            word_dim: WORD_DIM,
            word_hidden: 128,
            lstm_layers: 2,
            utterance_dim,
            ple_bins: 8,
            utterance_hidden: 128,
            sources,
            pool_hidden: 128,
            latent_len: 64,
            latent_dim: 768,
            ff_hidden: 768,
            perceiver_passes: 2,
        }
    }

    pub fn desk(task: Task, utterance_dim: usize, sources: Vec<(String, usize)>) -> Self {
        ModelConfig {
            word_hidden: 16,
            utterance_hidden: 16,
            pool_hidden: 16,
            latent_len: 8,
            latent_dim: 32,
            ff_hidden: 64,
            ..ModelConfig::full(task, utterance_dim, sources)
        }
    }

    fn embed_dim(&self) -> usize {
        match self.sources.len() {
            0 => 0,
            1 => 2 * self.sources[0].1,
            _ => self.latent_dim,
        }
    }

    /// Width of the head input.
    pub fn head_input_dim(&self) -> usize {
        self.embed_dim()
            + if self.use_word { self.word_hidden } else { 0 }
            + if self.utterance_dim > 0 { self.utterance_hidden } else { 0 }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: &str| Err(NeuralError::Config(m.to_string()));
        if self.head_input_dim() == 0 {
            return bad("at least one feature level must be enabled");
        }
        if self.use_word && (self.word_dim == 0 || self.word_hidden == 0 || self.lstm_layers == 0) {
            return bad("word level needs positive word_dim, word_hidden and lstm_layers");
        }
        if self.utterance_dim > 0 && (self.ple_bins == 0 || self.utterance_hidden == 0) {
            return bad("utterance level needs positive ple_bins and utterance_hidden");
        }
        if self.sources.iter().any(|(_, d)| *d == 0) {
            return bad("embedding sources need positive widths");
        }
        let mut names: Vec<&String> = self.sources.iter().map(|(n, _)| n).collect();
        names.sort();
        names.dedup();
        if names.len() != self.sources.len() {
            return bad("duplicate embedding source names");
        }
        if self.sources.len() == 1 && self.pool_hidden == 0 {
            return bad("pooling needs positive pool_hidden");
        }
        if self.sources.len() > 1 && (self.latent_len == 0 || self.latent_dim == 0 || self.ff_hidden == 0 || self.perceiver_passes == 0) {
            return bad("perceiver needs positive latent_len, latent_dim, ff_hidden and perceiver_passes");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbedBranch {
    None,
    Pool { source: String, pool: AttentivePool },
    Perceiver(Perceiver),
}

/// Trainable parameters. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub word: Option<Lstm>,
    pub utterance: Option<Ple>,
    pub embed: EmbedBranch,
    pub head: Linear,
}

impl Params for ModelParams {
    fn params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Tensor)>) {
        match &self.embed {
            EmbedBranch::None => {}
            EmbedBranch::Pool { source, pool } => pool.params(&join(prefix, &format!("embed.pool.{source}")), out),
            EmbedBranch::Perceiver(p) => p.params(&join(prefix, "embed.perceiver"), out),
        }
        if let Some(l) = &self.word {
            l.params(&join(prefix, "word.lstm"), out);
        }
        if let Some(p) = &self.utterance {
            p.params(&join(prefix, "utterance.ple"), out);
        }
        self.head.params(&join(prefix, "head"), out);
    }

    fn params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Tensor>) {
        match &mut self.embed {
            EmbedBranch::None => {}
            EmbedBranch::Pool { pool, .. } => pool.params_mut(out),
            EmbedBranch::Perceiver(p) => p.params_mut(out),
        }
        if let Some(l) = &mut self.word {
            l.params_mut(out);
        }
        if let Some(p) = &mut self.utterance {
            p.params_mut(out);
        }
        self.head.params_mut(out);
    }
}

/// Fitted, non-trainable state.
#[derive(Debug, Clone, PartialEq)]
pub struct Buffers {
    pub word_mean: Vec<f64>,
    pub word_std: Vec<f64>,
    pub ple_edges: Option<PleEdges>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParams,
    pub buffers: Buffers,
}

#[derive(Debug, Clone)]
enum EmbedCache {
    None,
    Pool(Option<PoolCache>),
    Perceiver(Option<PerceiverCache>),
}

/// Everything `backward` needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    word: Option<LstmCache>,
    utterance: Option<PleCache>,
    embed: EmbedCache,
    head_input: Vec<f64>,
    embed_dim: usize,
    word_dim: usize,
}

impl Model {
    /// Scaled-uniform initialisation from `seed`; buffers start as the
    /// identity standardisation with no PLE edges.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self, NeuralError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embed = match config.sources.len() {
            0 => EmbedBranch::None,
            1 => EmbedBranch::Pool {
                source: config.sources[0].0.clone(),
                pool: AttentivePool::new(config.sources[0].1, config.pool_hidden, &mut rng),
            },
            _ => EmbedBranch::Perceiver(Perceiver::new(
                &config.sources,
                config.latent_len,
                config.latent_dim,
                config.ff_hidden,
                config.perceiver_passes,
                &mut rng,
            )),
        };
        let word = config
            .use_word
            .then(|| Lstm::new(config.word_dim, config.word_hidden, config.lstm_layers, &mut rng));
        let utterance = (config.utterance_dim > 0)
            .then(|| Ple::new(config.utterance_dim, config.ple_bins, config.utterance_hidden, &mut rng));
        let head = Linear::new(config.head_input_dim(), config.task.output_dim(), &mut rng);
        let buffers = Buffers {
            word_mean: vec![0.0; config.word_dim],
            word_std: vec![1.0; config.word_dim],
            ple_edges: None,
        };
        Ok(Model {
            params: ModelParams {
                word,
                utterance,
                embed,
                head,
            },
            config,
            buffers,
        })
    }

    /// Fits word standardisation and PLE quantile edges on training bundles.
    pub fn fit_buffers(&mut self, bundles: &[&FeatureBundle]) -> Result<(), NeuralError> {
        let cfg = &self.config;
        if cfg.use_word {
            let rows: Vec<&[f64]> = bundles
                .iter()
                .flat_map(|b| (0..b.word_seq.rows()).filter(|_| !b.word_seq.is_empty()).map(|r| b.word_seq.row(r)))
                .collect();
            if let Some(bad) = rows.iter().find(|r| r.len() != cfg.word_dim) {
                return Err(NeuralError::Dimension {
                    what: "word features",
                    expected: cfg.word_dim,
                    found: bad.len(),
                });
            }
            let n = rows.len() as f64;
            if n > 0.0 {
                for j in 0..cfg.word_dim {
                    let m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
                    let v = rows.iter().map(|r| (r[j] - m) * (r[j] - m)).sum::<f64>() / n;
                    self.buffers.word_mean[j] = m;
                    self.buffers.word_std[j] = if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 };
                }
            }
        }
        if cfg.utterance_dim > 0 {
            let rows: Vec<&[f64]> = bundles
                .iter()
                .filter(|b| !b.utterance.is_empty())
                .map(|b| b.utterance.as_slice())
                .collect();
            if let Some(bad) = rows.iter().find(|r| r.len() != cfg.utterance_dim) {
                return Err(NeuralError::Dimension {
                    what: "utterance features",
                    expected: cfg.utterance_dim,
                    found: bad.len(),
                });
            }
            self.buffers.ple_edges = Some(PleEdges::fit(&rows, cfg.ple_bins)?);
        }
        Ok(())
    }

    fn standardise(&self, seq: &Tensor) -> Tensor {
        let mut x = seq.clone();
        for r in 0..x.rows() {
            for (j, v) in x.row_mut(r).iter_mut().enumerate() {
                *v = (*v - self.buffers.word_mean[j]) / self.buffers.word_std[j];
            }
        }
        x
    }

    pub fn forward(&self, bundle: &FeatureBundle) -> Result<(Vec<f64>, ForwardCache), NeuralError> {
        let cfg = &self.config;
        let mut head_input = Vec::with_capacity(cfg.head_input_dim());

        let embed = match &self.params.embed {
            EmbedBranch::None => EmbedCache::None,
            EmbedBranch::Pool { source, pool } => match bundle.embeddings.get(source).filter(|t| !t.is_empty()) {
                Some(frames) => {
                    let frames = as_matrix(frames);
                    let (out, cache) = pool.forward(&frames)?;
                    head_input.extend(out);
                    EmbedCache::Pool(Some(cache))
                }
                None => {
                    head_input.extend(std::iter::repeat(0.0).take(2 * pool.dim()));
                    EmbedCache::Pool(None)
                }
            },
            EmbedBranch::Perceiver(p) => {
                let mats: Vec<Option<Tensor>> = p
                    .sources
                    .iter()
                    .map(|s| bundle.embeddings.get(s).filter(|t| !t.is_empty()).map(as_matrix))
                    .collect();
                let refs: Vec<Option<&Tensor>> = mats.iter().map(Option::as_ref).collect();
                let (out, cache) = p.forward(&refs)?;
                head_input.extend(out);
                EmbedCache::Perceiver(cache)
            }
        };
        let embed_dim = head_input.len();

        let word = match &self.params.word {
            Some(lstm) => {
                let seq = &bundle.word_seq;
                if seq.rows() > 0 && !seq.is_empty() && seq.cols() != cfg.word_dim {
                    return Err(NeuralError::Dimension {
                        what: "word features",
                        expected: cfg.word_dim,
                        found: seq.cols(),
                    });
                }
                let x = if seq.is_empty() {
                    Tensor::zeros(&[0, cfg.word_dim])
                } else {
                    self.standardise(seq)
                };
                let (h, cache) = lstm.encode(&x);
                head_input.extend(h);
                Some(cache)
            }
            None => None,
        };
        let word_dim = head_input.len() - embed_dim;

        let utterance = match &self.params.utterance {
            Some(ple) if !bundle.utterance.is_empty() => {
                let edges = self
                    .buffers
                    .ple_edges
                    .as_ref()
                    .ok_or(NeuralError::Unfitted("utterance PLE edges have not been fitted"))?;
                let (h, cache) = ple.forward(edges, &bundle.utterance)?;
                head_input.extend(h);
                Some(cache)
            }
            Some(ple) => {
                head_input.extend(std::iter::repeat(0.0).take(ple.linear.output_dim()));
                None
            }
            None => None,
        };

        let out = self.params.head.forward(&head_input);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(NeuralError::NonFinite("model output".into()));
        }
        Ok((
            out,
            ForwardCache {
                word,
                utterance,
                embed,
                head_input,
                embed_dim,
                word_dim,
            },
        ))
    }

    /// Accumulates parameter gradients for one sample into `grad`.
    pub fn backward(&self, cache: &ForwardCache, dout: &[f64], grad: &mut ModelParams) {
        let dh = self.params.head.backward(&cache.head_input, dout, &mut grad.head);
        let (de, rest) = dh.split_at(cache.embed_dim);
        let (dw, du) = rest.split_at(cache.word_dim);
        match (&self.params.embed, &mut grad.embed, &cache.embed) {
            (EmbedBranch::Pool { pool, .. }, EmbedBranch::Pool { pool: g, .. }, EmbedCache::Pool(Some(c))) => {
                pool.backward(c, de, g);
            }
            (EmbedBranch::Perceiver(p), EmbedBranch::Perceiver(g), EmbedCache::Perceiver(Some(c))) => {
                p.backward(c, de, g);
            }
            _ => {}
        }
        if let (Some(lstm), Some(g), Some(c)) = (&self.params.word, &mut grad.word, &cache.word) {
            lstm.backward(c, dw, g);
        }
        if let (Some(ple), Some(g), Some(c)) = (&self.params.utterance, &mut grad.utterance, &cache.utterance) {
            ple.backward(c, du, g);
        }
    }

    /// A zeroed copy of the parameters, for accumulating gradients.
    pub fn zero_grads(&self) -> ModelParams {
        let mut g = self.params.clone();
        g.zero_grad();
        g
    }
}

/// Treats a vector-shaped embedding as a single frame.
fn as_matrix(t: &Tensor) -> Tensor {
    if t.shape().len() == 2 {
        t.clone()
    } else {
        Tensor::from_vec(&[1, t.len()], t.data().to_vec()).expect("same length")
    }
}
