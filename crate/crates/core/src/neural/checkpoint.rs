//! Binary checkpoints: `"MTRP"`, version, tensor count, then per tensor the
//! name length, name bytes, rank, dims and `f64` values, all little-endian.
//!
//! The architecture is recovered from tensor names and shapes plus a few
//! `meta.*` scalars, so a checkpoint is self-describing.

use std::collections::BTreeMap;
use std::path::Path;

use super::layers::Params;
use super::model::{Model, ModelConfig, Task};
use super::ple::PleEdges;
use super::NeuralError;
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"MTRP";
pub const CHECKPOINT_VERSION: u32 = 1;

fn named_tensors(model: &Model) -> Vec<(String, Tensor)> {
    let mut ps = Vec::new();
    model.params.params("", &mut ps);
    let mut out: Vec<(String, Tensor)> = ps.into_iter().map(|(n, t)| (n, t.clone())).collect();
    let cfg = &model.config;
    let scalar = |v: usize| Tensor::vector(vec![v as f64]);
    out.push((
        "meta.task".into(),
        scalar(match cfg.task {
            Task::Categorical => 0,
            Task::Attributes => 1,
        }),
    ));
    out.push(("meta.ple_bins".into(), scalar(cfg.ple_bins)));
    out.push(("meta.perceiver_passes".into(), scalar(cfg.perceiver_passes)));
    if cfg.use_word {
        out.push(("buffer.word_mean".into(), Tensor::vector(model.buffers.word_mean.clone())));
        out.push(("buffer.word_std".into(), Tensor::vector(model.buffers.word_std.clone())));
    }
    if let Some(e) = &model.buffers.ple_edges {
        out.push(("buffer.ple_edges".into(), e.edges.clone()));
    }
    out
}

pub fn encode_checkpoint(model: &Model) -> Vec<u8> {
    let tensors = named_tensors(model);
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in &tensors {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in t.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            format!("truncated: needed {n} bytes at offset {}, file has {}", self.pos, self.bytes.len())
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

fn parse(bytes: &[u8]) -> Result<BTreeMap<String, Tensor>, String> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err("bad magic (expected MTRP)".into());
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let count = r.u32()?;
    let mut map = BTreeMap::new();
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| "tensor name is not UTF-8".to_string())?;
        let rank = r.u32()? as usize;
        let dims: Vec<usize> = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<_, _>>()?;
        let n = dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| format!("tensor {name}: dimension overflow"))?;
        let raw = r.take(n.checked_mul(8).ok_or_else(|| format!("tensor {name}: dimension overflow"))?)?;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        let t = Tensor::from_vec(&dims, data).map_err(|e| format!("tensor {name}: {e}"))?;
        if map.insert(name.clone(), t).is_some() {
            return Err(format!("duplicate tensor {name}"));
        }
    }
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    Ok(map)
}

fn meta(map: &BTreeMap<String, Tensor>, name: &str) -> Result<usize, String> {
    let t = map.get(name).ok_or_else(|| format!("missing {name}"))?;
    match t.data() {
        [v] if *v >= 0.0 && v.fract() == 0.0 => Ok(*v as usize),
        _ => Err(format!("{name} must be one non-negative integer")),
    }
}

fn shape2(map: &BTreeMap<String, Tensor>, name: &str) -> Result<(usize, usize), String> {
    let t = map.get(name).ok_or_else(|| format!("missing {name}"))?;
    match t.shape() {
        [r, c] => Ok((*r, *c)),
        s => Err(format!("{name} has shape {s:?}, expected a matrix")),
    }
}

fn infer_config(map: &BTreeMap<String, Tensor>) -> Result<ModelConfig, String> {
    let task = match meta(map, "meta.task")? {
        0 => Task::Categorical,
        1 => Task::Attributes,
        t => return Err(format!("unknown task code {t}")),
    };
    let mut cfg = ModelConfig {
        task,
        ple_bins: meta(map, "meta.ple_bins")?,
        perceiver_passes: meta(map, "meta.perceiver_passes")?,
        ..ModelConfig::default()
    };

    let layers = (0..).take_while(|l| map.contains_key(&format!("word.lstm.{l}.w_ih"))).count();
    cfg.use_word = layers > 0;
    cfg.lstm_layers = layers;
    if layers > 0 {
        cfg.word_dim = shape2(map, "word.lstm.0.w_ih")?.1;
        cfg.word_hidden = shape2(map, "word.lstm.0.w_hh")?.1;
    }

    cfg.utterance_dim = 0;
    if map.contains_key("utterance.ple.linear.w") {
        let (hidden, inputs) = shape2(map, "utterance.ple.linear.w")?;
        if cfg.ple_bins == 0 || inputs % cfg.ple_bins != 0 {
            return Err("utterance PLE width is not a multiple of the bin count".into());
        }
        cfg.utterance_hidden = hidden;
        cfg.utterance_dim = inputs / cfg.ple_bins;
    }

    let pools: Vec<&str> = map
        .keys()
        .filter_map(|k| k.strip_prefix("embed.pool.")?.strip_suffix(".w"))
        .collect();
    let projs: Vec<&str> = map
        .keys()
        .filter_map(|k| k.strip_prefix("embed.perceiver.proj.")?.strip_suffix(".w"))
        .collect();
    cfg.sources = Vec::new();
    match (pools.as_slice(), projs.len()) {
        ([], 0) => {}
        ([src], 0) => {
            let (hidden, dim) = shape2(map, &format!("embed.pool.{src}.w"))?;
            cfg.pool_hidden = hidden;
            cfg.sources.push((src.to_string(), dim));
        }
        ([], n) if n >= 2 => {
            for src in &projs {
                cfg.sources.push((src.to_string(), shape2(map, &format!("embed.perceiver.proj.{src}.w"))?.1));
            }
            let (l, d) = shape2(map, "embed.perceiver.latents")?;
            cfg.latent_len = l;
            cfg.latent_dim = d;
            cfg.ff_hidden = shape2(map, "embed.perceiver.block.ff.fc1.w")?.0;
        }
        _ => return Err("inconsistent embedding branch tensors".into()),
    }
    Ok(cfg)
}

fn rebuild(map: BTreeMap<String, Tensor>) -> Result<Model, String> {
    let cfg = infer_config(&map)?;
    let mut model = Model::init(cfg, 0).map_err(|e| e.to_string())?;
    let names: Vec<String> = {
        let mut ps = Vec::new();
        model.params.params("", &mut ps);
        ps.into_iter().map(|(n, _)| n).collect()
    };
    let mut slots = Vec::new();
    model.params.params_mut(&mut slots);
    let mut used = names.len() + 3;
    for (name, slot) in names.iter().zip(slots) {
        let t = map.get(name).ok_or_else(|| format!("missing tensor {name}"))?;
        if t.shape() != slot.shape() {
            return Err(format!("tensor {name} has shape {:?}, expected {:?}", t.shape(), slot.shape()));
        }
        *slot = t.clone();
    }
    let vector = |name: &str, len: usize| -> Result<Vec<f64>, String> {
        let t = map.get(name).ok_or_else(|| format!("missing {name}"))?;
        if t.shape() != [len] {
            return Err(format!("{name} has shape {:?}, expected [{len}]", t.shape()));
        }
        Ok(t.data().to_vec())
    };
    if model.config.use_word {
        model.buffers.word_mean = vector("buffer.word_mean", model.config.word_dim)?;
        model.buffers.word_std = vector("buffer.word_std", model.config.word_dim)?;
        used += 2;
    }
    if let Some(e) = map.get("buffer.ple_edges") {
        if e.shape() != [model.config.utterance_dim, model.config.ple_bins + 1] {
            return Err(format!("buffer.ple_edges has shape {:?}", e.shape()));
        }
        let rows = (0..e.rows()).map(|r| e.row(r).to_vec()).collect();
        model.buffers.ple_edges = Some(PleEdges::from_rows(rows).map_err(|e| e.to_string())?);
        used += 1;
    }
    if used != map.len() {
        return Err(format!("{} unrecognised tensors", map.len() as isize - used as isize));
    }
    Ok(model)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Model, NeuralError> {
    parse(bytes).and_then(rebuild).map_err(|message| NeuralError::Checkpoint {
        path: "<memory>".into(),
        message,
    })
}

pub fn save_checkpoint(path: &Path, model: &Model) -> Result<(), NeuralError> {
    std::fs::write(path, encode_checkpoint(model)).map_err(|source| NeuralError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Model, NeuralError> {
    let bytes = std::fs::read(path).map_err(|source| NeuralError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&bytes).and_then(rebuild).map_err(|message| NeuralError::Checkpoint {
        path: path.to_path_buf(),
        message,
    })
}
