//! Descriptive statistics with the "empty set gives 0" convention.

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

/// Population standard deviation.
pub fn std(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn max(x: &[f64]) -> f64 {
    x.iter().copied().reduce(f64::max).unwrap_or(0.0)
}

pub fn range(x: &[f64]) -> f64 {
    match (x.iter().copied().reduce(f64::min), x.iter().copied().reduce(f64::max)) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0.0,
    }
}

/// Least-squares slope of `y` against `t`; 0 when `t` has no spread.
pub fn slope(t: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(t.len(), y.len());
    if t.len() < 2 {
        return 0.0;
    }
    let (mt, my) = (mean(t), mean(y));
    let sxx: f64 = t.iter().map(|a| (a - mt) * (a - mt)).sum();
    if sxx <= 0.0 {
        return 0.0;
    }
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - mt) * (b - my)).sum();
    sxy / sxx
}

/// Linear-interpolation quantile (`q` in `[0, 1]`).
pub fn quantile(x: &[f64], q: f64) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
}

/// Semitones relative to 27.5 Hz.
pub fn semitones(f0_hz: f64) -> f64 {
    12.0 * (f0_hz / 27.5).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        assert_eq!(mean(&[]), 0.0);
        assert_eq!(std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]), 2.0);
        assert_eq!(range(&[3.0, -1.0, 2.0]), 4.0);
        assert_eq!(slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]), 2.0);
        assert_eq!(slope(&[1.0, 1.0], &[0.0, 5.0]), 0.0);
        assert_eq!(quantile(&[4.0, 1.0, 3.0, 2.0], 0.5), 2.5);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.2), 1.8);
        assert_eq!(semitones(55.0), 12.0);
        assert_eq!(semitones(27.5), 0.0);
    }
}
