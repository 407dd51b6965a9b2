//! Shared fixtures for integration tests.
#![allow(dead_code)]

use mater::neural::layers::{Attention, FeedForward, LayerNorm, Linear};
use mater::neural::train::batch_loss;
use mater::neural::{
    check_input, check_params, weighted_ce, ccc_loss, AttentivePool, GradCheck, LossKind, Lstm, Model, ModelConfig, Params,
    Perceiver, Ple, PleEdges, SoftTarget, Task, TrainExample, FD_STEP,
};
use mater::synth::{separable_dataset, SyntheticSpec};
use mater::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BLOCK_TOLERANCE: f64 = 1e-4;
pub const NETWORK_TOLERANCE: f64 = 1e-3;
const PROBES: usize = 24;

pub fn rand_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn zeroed<P: Params + Clone>(p: &P) -> P {
    let mut g = p.clone();
    g.zero_grad();
    g
}

fn reshape(t: &Tensor, x: &[f64]) -> Tensor {
    Tensor::from_vec(t.shape(), x.to_vec()).unwrap()
}

fn merge(a: GradCheck, b: GradCheck) -> GradCheck {
    let worst = if b.max_rel_error > a.max_rel_error { b.worst } else { a.worst };
    GradCheck {
        max_rel_error: a.max_rel_error.max(b.max_rel_error),
        checked: a.checked + b.checked,
        worst,
    }
}

pub struct BlockResult {
    pub name: &'static str,
    pub check: GradCheck,
    pub tolerance: f64,
}

fn lstm(rng: &mut ChaCha8Rng) -> GradCheck {
    let net = Lstm::new(5, 6, 2, rng);
    let x = rand_tensor(&[4, 5], rng);
    let r: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (_, cache) = net.encode(&x);
    let mut g = zeroed(&net);
    let dx = net.backward(&cache, &r, &mut g);
    let p = check_params(&net, &g, |n| dot(&n.encode(&x).0, &r), FD_STEP, PROBES);
    let i = check_input(x.data(), dx.data(), |v| dot(&net.encode(&reshape(&x, v)).0, &r), FD_STEP);
    merge(p, i)
}

fn ple(rng: &mut ChaCha8Rng) -> GradCheck {
    let rows: Vec<Vec<f64>> = (0..40).map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let edges = PleEdges::fit(&refs, 4).unwrap();
    let net = Ple::new(3, 4, 5, rng);
    // Inputs sit inside bins, away from the kinks.
    let x: Vec<f64> = (0..3).map(|f| 0.5 * (edges.edges.get(f, 1) + edges.edges.get(f, 2))).collect();
    let r: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (_, cache) = net.forward(&edges, &x).unwrap();
    let mut g = zeroed(&net);
    let dx = net.backward(&cache, &r, &mut g);
    let p = check_params(&net, &g, |n| dot(&n.forward(&edges, &x).unwrap().0, &r), FD_STEP, PROBES);
    let i = check_input(&x, &dx, |v| dot(&net.forward(&edges, v).unwrap().0, &r), FD_STEP);
    merge(p, i)
}

fn pool(rng: &mut ChaCha8Rng) -> GradCheck {
    let net = AttentivePool::new(4, 5, rng);
    let x = rand_tensor(&[6, 4], rng);
    let r: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (_, cache) = net.forward(&x).unwrap();
    let mut g = zeroed(&net);
    let dx = net.backward(&cache, &r, &mut g);
    let p = check_params(&net, &g, |n| dot(&n.forward(&x).unwrap().0, &r), FD_STEP, PROBES);
    let i = check_input(x.data(), dx.data(), |v| dot(&net.forward(&reshape(&x, v)).unwrap().0, &r), FD_STEP);
    merge(p, i)
}

fn perceiver(rng: &mut ChaCha8Rng) -> GradCheck {
    let net = Perceiver::new(&[("a".into(), 5), ("b".into(), 3)], 8, 32, 64, 2, rng);
    let a = rand_tensor(&[3, 5], rng);
    let b = rand_tensor(&[4, 3], rng);
    let r: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (_, cache) = net.forward(&[Some(&a), Some(&b)]).unwrap();
    let mut g = zeroed(&net);
    let dins = net.backward(&cache.unwrap(), &r, &mut g);
    let mut out = check_params(&net, &g, |n| dot(&n.forward(&[Some(&a), Some(&b)]).unwrap().0, &r), FD_STEP, PROBES);
    for (idx, dx) in dins {
        let f = |v: &[f64]| {
            let (aa, bb) = if idx == 0 { (reshape(&a, v), b.clone()) } else { (a.clone(), reshape(&b, v)) };
            dot(&net.forward(&[Some(&aa), Some(&bb)]).unwrap().0, &r)
        };
        let x = if idx == 0 { &a } else { &b };
        out = merge(out, check_input(x.data(), dx.data(), f, FD_STEP));
    }
    out
}

fn attention_and_norms(rng: &mut ChaCha8Rng) -> GradCheck {
    let att = Attention::new(4, 3, 5, rng);
    let xq = rand_tensor(&[2, 4], rng);
    let xk = rand_tensor(&[5, 3], rng);
    let r = rand_tensor(&[2, 5], rng);
    let (_, cache) = att.forward(&xq, &xk);
    let mut g = zeroed(&att);
    let (dq, dk) = att.backward(&xq, &xk, &cache, &r, &mut g);
    let mut out = check_params(&att, &g, |n| dot(n.forward(&xq, &xk).0.data(), r.data()), FD_STEP, PROBES);
    out = merge(out, check_input(xq.data(), dq.data(), |v| dot(att.forward(&reshape(&xq, v), &xk).0.data(), r.data()), FD_STEP));
    out = merge(out, check_input(xk.data(), dk.data(), |v| dot(att.forward(&xq, &reshape(&xk, v)).0.data(), r.data()), FD_STEP));

    let mut ln = LayerNorm::new(5);
    ln.gamma = rand_tensor(&[5], rng);
    ln.beta = rand_tensor(&[5], rng);
    let x = rand_tensor(&[3, 5], rng);
    let r = rand_tensor(&[3, 5], rng);
    let (_, cache) = ln.forward(&x);
    let mut g = zeroed(&ln);
    let dx = ln.backward(&cache, &r, &mut g);
    out = merge(out, check_params(&ln, &g, |n| dot(n.forward(&x).0.data(), r.data()), FD_STEP, PROBES));
    out = merge(out, check_input(x.data(), dx.data(), |v| dot(ln.forward(&reshape(&x, v)).0.data(), r.data()), FD_STEP));

    let ff = FeedForward::new(5, 7, rng);
    let (_, cache) = ff.forward(&x);
    let mut g = zeroed(&ff);
    let dx = ff.backward(&x, &cache, &r, &mut g);
    out = merge(out, check_params(&ff, &g, |n| dot(n.forward(&x).0.data(), r.data()), FD_STEP, PROBES));
    merge(out, check_input(x.data(), dx.data(), |v| dot(ff.forward(&reshape(&x, v)).0.data(), r.data()), FD_STEP))
}

fn head(rng: &mut ChaCha8Rng) -> GradCheck {
    let lin = Linear::new(6, 8, rng);
    let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let r: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut g = zeroed(&lin);
    let dx = lin.backward(&x, &r, &mut g);
    let p = check_params(&lin, &g, |n| dot(&n.forward(&x), &r), FD_STEP, PROBES);
    merge(p, check_input(&x, &dx, |v| dot(&lin.forward(v), &r), FD_STEP))
}

fn losses(rng: &mut ChaCha8Rng) -> (GradCheck, GradCheck) {
    let z: Vec<f64> = (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut q = [0.0; 8];
    q.iter_mut().for_each(|v| *v = rng.gen_range(0.0..1.0));
    let s: f64 = q.iter().sum();
    q.iter_mut().for_each(|v| *v /= s);
    let t = SoftTarget::new(q).unwrap();
    let mut w = [0.0; 8];
    w.iter_mut().for_each(|v| *v = rng.gen_range(0.5..2.0));
    let (_, g) = weighted_ce(&z, &t, &w);
    let ce = check_input(&z, &g, |v| weighted_ce(v, &t, &w).0, FD_STEP);

    let pred: Vec<f64> = (0..10).map(|_| rng.gen_range(1.0..7.0)).collect();
    let gold: Vec<f64> = (0..10).map(|_| rng.gen_range(1.0..7.0)).collect();
    let (_, g) = ccc_loss(&pred, &gold).unwrap();
    let cc = check_input(&pred, &g, |v| ccc_loss(v, &gold).unwrap().0, FD_STEP);
    (ce, cc)
}

/// A small end-to-end setup: word LSTM, utterance PLE and a two-source Perceiver.
pub fn network_examples(task: Task, n: usize) -> (Model, Vec<TrainExample>) {
    let spec = SyntheticSpec {
        samples_per_class: 1,
        ..SyntheticSpec::default()
    };
    let mut data = separable_dataset(&spec);
    data.truncate(n);
    if task == Task::Attributes {
        for (i, e) in data.iter_mut().enumerate() {
            let v = 1.0 + (i as f64 * 0.7) % 6.0;
            e.target = mater::neural::Target::Attributes([v, 7.0 - v * 0.5, 2.0 + (i % 3) as f64]);
        }
    }
    let cfg = ModelConfig::desk(task, spec.utterance_dim, spec.sources.clone());
    let mut model = Model::init(cfg, 11).unwrap();
    let bundles: Vec<_> = data.iter().map(|e| &e.bundle).collect();
    model.fit_buffers(&bundles).unwrap();
    (model, data)
}

fn network(task: Task, kind: LossKind) -> GradCheck {
    let (model, data) = network_examples(task, 4);
    let refs: Vec<&TrainExample> = data.iter().collect();
    let weights = [1.0, 0.5, 2.0, 1.0, 1.5, 0.8, 1.2, 1.0];
    let (_, grad) = batch_loss(&model, &refs, kind, &weights).unwrap();
    check_params(
        &model.params,
        &grad,
        |p| {
            let m = Model {
                params: p.clone(),
                ..model.clone()
            };
            batch_loss(&m, &refs, kind, &weights).unwrap().0
        },
        FD_STEP,
        8,
    )
}

/// Every block's gradient check, each with its tolerance.
pub fn gradient_suite(seed: u64) -> Vec<BlockResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ce, cc) = losses(&mut rng);
    let block = |name, check| BlockResult {
        name,
        check,
        tolerance: BLOCK_TOLERANCE,
    };
    vec![
        block("lstm", lstm(&mut rng)),
        block("ple", ple(&mut rng)),
        block("attentive_pool", pool(&mut rng)),
        block("perceiver", perceiver(&mut rng)),
        block("attention_layer_norm_feed_forward", attention_and_norms(&mut rng)),
        block("linear_head", head(&mut rng)),
        BlockResult {
            name: "weighted_ce",
            check: ce,
            tolerance: 1e-6,
        },
        block("ccc_loss", cc),
        BlockResult {
            name: "network_categorical",
            check: network(Task::Categorical, LossKind::WeightedCe),
            tolerance: NETWORK_TOLERANCE,
        },
        BlockResult {
            name: "network_attributes",
            check: network(Task::Attributes, LossKind::Ccc),
            tolerance: NETWORK_TOLERANCE,
        },
    ]
}
