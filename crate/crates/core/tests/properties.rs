//! Property tests for invariants that hold across modules.

use std::collections::{BTreeMap, BTreeSet};

use mater::dataio::{balanced_splits, soft_targets, Sample, SplitSpec};
use mater::ensemble::{averaging_ensemble, rank_probs, uncertainty_ensemble, ProbMatrix};
use mater::metrics::{accuracy, macro_f1};
use mater::neural::{ccc, PleEdges};
use mater::signal::{jitter_local, jitter_ppq5, shimmer_db, shimmer_local};
use mater::{Category, NUM_CATEGORIES};
use proptest::prelude::*;

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

fn paired(n: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    n.prop_flat_map(|n| (prop::collection::vec(-10.0..10.0f64, n), prop::collection::vec(-10.0..10.0f64, n)))
}

fn prob_row() -> impl Strategy<Value = [f64; NUM_CATEGORIES]> {
    prop::array::uniform8(0.01..1.0f64).prop_map(|mut r| {
        let s: f64 = r.iter().sum();
        r.iter_mut().for_each(|v| *v /= s);
        r
    })
}

fn models(max_m: usize, max_n: usize) -> impl Strategy<Value = Vec<Vec<[f64; NUM_CATEGORIES]>>> {
    (1..=max_m, 1..=max_n).prop_flat_map(|(m, n)| prop::collection::vec(prop::collection::vec(prob_row(), m), n))
}

fn to_matrices(rows: &[Vec<[f64; NUM_CATEGORIES]>]) -> Vec<ProbMatrix> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| ProbMatrix::new(format!("m{i}"), r.clone()).unwrap())
        .collect()
}

fn category() -> impl Strategy<Value = Category> {
    (0..NUM_CATEGORIES).prop_map(|i| Category::ALL[i])
}

proptest! {
    #[test]
    fn ccc_is_symmetric_and_bounded_by_pearson((x, y) in paired(2..40)) {
        let a = ccc(&x, &y).unwrap();
        let b = ccc(&y, &x).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&a));
        let r = pearson(&x, &y);
        if r.is_finite() {
            prop_assert!(a.abs() <= r.abs() + 1e-12, "ccc {} pearson {}", a, r);
        }
    }

    #[test]
    fn ccc_is_one_only_for_identical_sequences(x in prop::collection::vec(-10.0..10.0f64, 2..30), shift in 0.01..5.0f64) {
        prop_assert!((ccc(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let moved: Vec<f64> = x.iter().map(|v| v + shift).collect();
        prop_assert!(ccc(&x, &moved).unwrap() < 1.0);
    }

    #[test]
    fn ple_components_are_monotone_and_bounded(
        train in prop::collection::vec(-5.0..5.0f64, 1..40),
        bins in 1usize..10,
        a in -8.0..8.0f64,
        b in -8.0..8.0f64,
    ) {
        let rows: Vec<[f64; 1]> = train.iter().map(|&v| [v]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let edges = PleEdges::fit(&refs, bins).unwrap();
        prop_assert!(edges.edges.row(0).windows(2).all(|w| w[0] <= w[1]));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (zl, _) = edges.encode(&[lo]);
        let (zh, _) = edges.encode(&[hi]);
        prop_assert_eq!(zl.len(), bins);
        for (l, h) in zl.iter().zip(&zh) {
            prop_assert!((0.0..=1.0).contains(l) && (0.0..=1.0).contains(h));
            prop_assert!(l <= h);
        }
    }

    #[test]
    fn ranks_of_each_column_sum_to_a_triangle_number(rows in models(8, 1)) {
        let r = rank_probs(&ProbMatrix::new("m", rows[0].clone()).unwrap());
        let m = rows[0].len() as f64;
        for c in 0..NUM_CATEGORIES {
            let s: f64 = r.ranks.iter().map(|row| row[c]).sum();
            prop_assert_eq!(s, m * (m + 1.0) / 2.0);
        }
    }

    #[test]
    fn ensembles_follow_sample_and_model_permutations(rows in models(6, 4), rotate in 0usize..6) {
        let base = uncertainty_ensemble(&to_matrices(&rows)).unwrap().labels;
        let base_avg = averaging_ensemble(&to_matrices(&rows)).unwrap();

        let mut reordered = rows.clone();
        reordered.reverse();
        prop_assert_eq!(&uncertainty_ensemble(&to_matrices(&reordered)).unwrap().labels, &base);

        let m = rows[0].len();
        let k = rotate % m;
        let rotated: Vec<Vec<_>> = rows.iter().map(|r| { let mut r = r.clone(); r.rotate_left(k); r }).collect();
        let mut expected = base.clone();
        expected.rotate_left(k);
        prop_assert_eq!(uncertainty_ensemble(&to_matrices(&rotated)).unwrap().labels, expected);
        let mut expected_avg = base_avg;
        expected_avg.rotate_left(k);
        prop_assert_eq!(averaging_ensemble(&to_matrices(&rotated)).unwrap(), expected_avg);
    }

    #[test]
    fn perturbation_measures_are_scale_invariant(
        periods in prop::collection::vec(0.002..0.02f64, 6..40),
        scale in 0.1..10.0f64,
    ) {
        let scaled: Vec<f64> = periods.iter().map(|p| p * scale).collect();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
        prop_assert!(close(jitter_local(&periods), jitter_local(&scaled)));
        prop_assert!(close(jitter_ppq5(&periods), jitter_ppq5(&scaled)));
        prop_assert!(close(shimmer_local(&periods), shimmer_local(&scaled)));
        prop_assert!(close(shimmer_db(&periods), shimmer_db(&scaled)));
        prop_assert!(jitter_local(&periods) >= 0.0);
    }

    #[test]
    fn classification_scores_are_percentages(
        pairs in prop::collection::vec((category(), category()), 1..80),
    ) {
        let (preds, golds): (Vec<Category>, Vec<Category>) = pairs.into_iter().unzip();
        let f = macro_f1(&preds, &golds).unwrap();
        let a = accuracy(&preds, &golds).unwrap();
        prop_assert!((0.0..=100.0).contains(&f));
        prop_assert!((0.0..=100.0).contains(&a));
        prop_assert_eq!(macro_f1(&golds, &golds).unwrap(), 100.0);
    }

    #[test]
    fn macro_f1_ignores_consistent_relabeling(
        pairs in prop::collection::vec((category(), category()), 1..50),
        perm in Just((0..NUM_CATEGORIES).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let (preds, golds): (Vec<Category>, Vec<Category>) = pairs.into_iter().unzip();
        let relabel = |v: &[Category]| v.iter().map(|c| Category::ALL[perm[c.index()]]).collect::<Vec<_>>();
        let a = macro_f1(&preds, &golds).unwrap();
        let b = macro_f1(&relabel(&preds), &relabel(&golds)).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
        prop_assert_eq!(accuracy(&preds, &golds).unwrap() == 100.0, preds == golds);
    }

    #[test]
    fn soft_targets_lie_on_the_simplex(votes in prop::collection::btree_map(category(), 1u32..20, 1..8)) {
        let votes: BTreeMap<String, u32> = votes.into_iter().map(|(c, n)| (c.code().to_string(), n)).collect();
        let t = soft_targets(&votes).unwrap();
        let d = t.dist();
        prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(d.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn splits_are_balanced_without_repeats(
        extra in prop::collection::vec(0usize..5, NUM_CATEGORIES),
        per_class in 1usize..4,
        n_sets in 1usize..4,
        seed in any::<u64>(),
    ) {
        let mut samples = Vec::new();
        for (c, e) in extra.iter().enumerate() {
            for k in 0..per_class + e {
                samples.push(Sample {
                    id: format!("{c}-{k}"),
                    wav: "x.wav".into(),
                    transcript: String::new(),
                    words: vec![],
                    votes: None,
                    label: Some(Category::ALL[c]),
                    attributes: None,
                    embeddings: BTreeMap::new(),
                });
            }
        }
        let spec = SplitSpec { n_sets, per_class, seed };
        let sets = balanced_splits(&samples, &spec).unwrap();
        prop_assert_eq!(sets.len(), n_sets);
        for set in &sets {
            let unique: BTreeSet<_> = set.iter().collect();
            prop_assert_eq!(unique.len(), set.len());
            let mut counts = [0usize; NUM_CATEGORIES];
            for &i in set {
                counts[samples[i].label.unwrap().index()] += 1;
            }
            prop_assert!(counts.iter().all(|&c| c == per_class));
        }
        prop_assert_eq!(balanced_splits(&samples, &spec).unwrap(), sets);
    }
}
