use std::collections::HashMap;

use nalgebra::DMatrix;
use sisperm::chain::max_correlation;
use sisperm::counting::{log_count, perron};
use sisperm::states::encode_permutation;
use sisperm::{band_graph, enumerate_matchings, BandSpec, StateTuple};

/// Maximal correlation between consecutive states, from the joint law of
/// `(x_i, x_{i+1})` over all enumerated permutations, via nalgebra's SVD.
fn enumerated_correlations(spec: BandSpec) -> Vec<f64> {
    let paths: Vec<Vec<StateTuple>> = enumerate_matchings(&band_graph(spec))
        .unwrap()
        .iter()
        .map(|p| encode_permutation(p, spec).unwrap().states)
        .collect();
    let total = paths.len() as f64;
    (0..spec.n)
        .map(|i| {
            let mut joint: HashMap<(StateTuple, StateTuple), f64> = HashMap::new();
            let mut left: HashMap<StateTuple, f64> = HashMap::new();
            let mut right: HashMap<StateTuple, f64> = HashMap::new();
            for p in &paths {
                *joint.entry((p[i], p[i + 1])).or_default() += 1.0 / total;
                *left.entry(p[i]).or_default() += 1.0 / total;
                *right.entry(p[i + 1]).or_default() += 1.0 / total;
            }
            let xs: Vec<StateTuple> = left.keys().copied().collect();
            let ys: Vec<StateTuple> = right.keys().copied().collect();
            let b = DMatrix::from_fn(xs.len(), ys.len(), |r, c| {
                joint.get(&(xs[r], ys[c])).copied().unwrap_or(0.0) / (left[&xs[r]] * right[&ys[c]]).sqrt()
            });
            let mut sv: Vec<f64> = b.singular_values().iter().copied().collect();
            sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
            sv.get(1).copied().unwrap_or(0.0).min(1.0)
        })
        .collect()
}

#[test]
fn max_correlation_matches_enumeration_svd() {
    for (s, t, n) in [(1, 1, 8), (2, 1, 8), (2, 2, 8), (3, 2, 7)] {
        let spec = BandSpec::new(s, t, n).unwrap();
        let got = max_correlation(spec).unwrap().rho;
        let want = enumerated_correlations(spec);
        for (i, (g, w)) in got.iter().zip(&want).enumerate() {
            assert!((g - w).abs() < 1e-9, "{spec} step {i}: {g} vs {w}");
        }
    }
}

#[test]
fn growth_rate_matches_perron_eigenvalue() {
    for (s, t) in [(1, 1), (2, 1), (2, 2), (3, 2)] {
        let lambda = perron(s, t).unwrap().lambda;
        let n = 2048;
        let a = log_count(BandSpec::new(s, t, n).unwrap()).unwrap();
        let b = log_count(BandSpec::new(s, t, 2 * n).unwrap()).unwrap();
        let rate = (b - a) / n as f64;
        assert!((rate - lambda.ln()).abs() < 1e-8, "({s},{t}): {rate} vs {}", lambda.ln());
    }
}

#[test]
fn fibonacci_transfer_matrix() {
    let p = perron(1, 1).unwrap();
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((p.lambda - phi).abs() < 1e-12);
    assert!((p.lambda2_abs - 1.0 / phi).abs() < 1e-6);
    assert!(p.v.iter().all(|&v| v > 0.0));
}
