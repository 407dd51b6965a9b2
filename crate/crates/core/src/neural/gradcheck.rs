//! Central finite-difference checks for analytic gradients.

use super::layers::Params;

pub const FD_STEP: f64 = 1e-5;

/// `|a - n| / max(|a|, |n|, 1e-6)`; the floor keeps near-zero gradients
/// from dominating.
pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Name and flat index of the worst entry.
    pub worst: String,
}

impl GradCheck {
    fn new() -> Self {
        GradCheck {
            max_rel_error: 0.0,
            checked: 0,
            worst: String::new(),
        }
    }

    fn record(&mut self, name: &str, i: usize, analytic: f64, numeric: f64) {
        let e = rel_error(analytic, numeric);
        self.checked += 1;
        if e > self.max_rel_error || self.worst.is_empty() {
            self.max_rel_error = self.max_rel_error.max(e);
            self.worst = format!("{name}[{i}]");
        }
    }
}

/// Evenly spaced indices, at most `max` of them.
fn sample(len: usize, max: usize) -> Vec<usize> {
    if len <= max {
        (0..len).collect()
    } else {
        (0..max).map(|k| k * len / max).collect()
    }
}

/// Compares `analytic` against central differences of `loss` for every
/// parameter tensor, probing at most `max_per_tensor` entries of each.
pub fn check_params<P: Params + Clone>(
    params: &P,
    analytic: &P,
    loss: impl Fn(&P) -> f64,
    step: f64,
    max_per_tensor: usize,
) -> GradCheck {
    let mut grads = Vec::new();
    analytic.params("", &mut grads);
    let mut work = params.clone();
    let mut out = GradCheck::new();
    for (k, (name, g)) in grads.iter().enumerate() {
        for i in sample(g.len(), max_per_tensor) {
            let orig = nudge(&mut work, k, i, None);
            nudge(&mut work, k, i, Some(orig + step));
            let up = loss(&work);
            nudge(&mut work, k, i, Some(orig - step));
            let down = loss(&work);
            nudge(&mut work, k, i, Some(orig));
            out.record(name, i, g.data()[i], (up - down) / (2.0 * step));
        }
    }
    out
}

/// Reads entry `i` of tensor `k`, optionally overwriting it; returns the old value.
fn nudge<P: Params>(p: &mut P, k: usize, i: usize, value: Option<f64>) -> f64 {
    let mut ts = Vec::new();
    p.params_mut(&mut ts);
    let slot = &mut ts[k].data_mut()[i];
    let old = *slot;
    if let Some(v) = value {
        *slot = v;
    }
    old
}

/// Compares an analytic input gradient against central differences of `f`.
pub fn check_input(x: &[f64], analytic: &[f64], f: impl Fn(&[f64]) -> f64, step: f64) -> GradCheck {
    assert_eq!(x.len(), analytic.len(), "one gradient entry per input");
    let mut out = GradCheck::new();
    let mut work = x.to_vec();
    for i in 0..x.len() {
        work[i] = x[i] + step;
        let up = f(&work);
        work[i] = x[i] - step;
        let down = f(&work);
        work[i] = x[i];
        out.record("input", i, analytic[i], (up - down) / (2.0 * step));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_input_gradient_is_exact() {
        let x = [0.5, -1.0, 2.0];
        let g: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let r = check_input(&x, &g, |v| v.iter().map(|a| a * a).sum(), FD_STEP);
        assert_eq!(r.checked, 3);
        assert!(r.max_rel_error < 1e-8);
        let wrong: Vec<f64> = g.iter().map(|v| v * 1.1).collect();
        assert!(check_input(&x, &wrong, |v| v.iter().map(|a| a * a).sum(), FD_STEP).max_rel_error > 0.05);
    }

    #[test]
    fn sampling_is_bounded_and_spread() {
        assert_eq!(sample(3, 10), vec![0, 1, 2]);
        let s = sample(1000, 4);
        assert_eq!(s, vec![0, 250, 500, 750]);
    }
}
