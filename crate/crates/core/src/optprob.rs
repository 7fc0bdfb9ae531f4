//! Optimal up-move probabilities for `t = 1` bands and limiting kernels.
//!
//! For the band with `s` below and `t = 1` above, the probabilities `p_1..p_s`
//! that make every permutation's sampling probability comparable satisfy
//!
//! ```text
//! (1 - p_1)^k     = p_1 ... p_{k-1} (1 - p_k),   k = 1..s
//! (1 - p_1)^{s+1} = p_1 ... p_s
//! ```
//!
//! Here the length of the vector is called `t` to match the usual tabulation.
//! `p_1` is the root in `(1/3, 1/2)` of `2p - 1 + (1 - p)^{t+2}`; the remaining
//! entries follow from `p_t = (1 - p_1)/(2 - p_1)` and
//! `p_k = (1 - p_1) / ((1 - p_1) + (1 - p_{k+1}))`, which contracts errors by about
//! one half per step. All of this runs in double-double precision.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use crate::counting::{ln_biguint, perron_for};
use crate::error::{Error, Result};
use crate::graph::BandSpec;
use crate::sampler::Sampler;
use crate::scalar::{DoubleDouble, Scalar};
use crate::states::StateSpace;

/// Largest supported vector length.
pub const MAX_OPT_T: usize = 64;

/// Optimal probabilities `p_1 > p_2 > ... > p_t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptProbs<T> {
    pub t: usize,
    pub p: Vec<T>,
}

impl<T: Scalar> OptProbs<T> {
    /// Largest residual of the defining equations.
    pub fn residual(&self) -> T {
        let one = T::one();
        let q = one - self.p[0];
        let mut prod = one;
        let mut worst = T::zero();
        let mut qk = one;
        for k in 0..self.t {
            qk *= q;
            let r = (qk - prod * (one - self.p[k])).magnitude();
            if r > worst {
                worst = r;
            }
            prod *= self.p[k];
        }
        let r = (qk * q - prod).magnitude();
        if r > worst {
            worst = r;
        }
        worst
    }

    pub fn to_f64(&self) -> OptProbs<f64> {
        OptProbs { t: self.t, p: self.p.iter().map(|v| v.as_f64()).collect() }
    }
}

fn f_and_df<T: Scalar>(p: T, t: usize) -> (T, T) {
    let one = T::one();
    let two = one + one;
    let q = one - p;
    let qt1 = q.powu(t as u32 + 1);
    (two * p - one + qt1 * q, two - T::from_count(t + 2) * qt1)
}

/// Root of `2p - 1 + (1-p)^{t+2}` in `(1/3, 1/2)` by bisection then Newton.
fn solve_p1<T: Scalar>(t: usize) -> Result<T> {
    let one = T::one();
    let two = one + one;
    let mut lo = one / (two + one);
    let mut hi = one / two;
    // f(1/3) < 0 < f(1/2) for every t >= 1.
    while (hi - lo).as_f64() > 1e-6 {
        let mid = (lo + hi) / two;
        if f_and_df(mid, t).0 < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut p = (lo + hi) / two;
    for _ in 0..50 {
        let (f, df) = f_and_df(p, t);
        let step = f / df;
        p -= step;
        if step.magnitude() <= T::unit_roundoff() * p.magnitude() {
            return Ok(p);
        }
    }
    let (f, _) = f_and_df(p, t);
    if f.magnitude().as_f64() < 1e-28 {
        Ok(p)
    } else {
        Err(Error::NonConvergence("optimal probability root"))
    }
}

/// Solve in double-double precision.
pub fn solve_opt_probs_dd(t: usize) -> Result<OptProbs<DoubleDouble>> {
    solve_opt_probs_generic::<DoubleDouble>(t)
}

pub fn solve_opt_probs_generic<T: Scalar>(t: usize) -> Result<OptProbs<T>> {
    if t == 0 || t > MAX_OPT_T {
        return Err(Error::InvalidArgument(format!("t must lie in 1..={MAX_OPT_T}, got {t}")));
    }
    let one = T::one();
    let p1 = solve_p1::<T>(t)?;
    let q1 = one - p1;
    let mut p = vec![T::zero(); t];
    let mut next = T::zero();
    for k in (1..t).rev() {
        p[k] = q1 / (q1 + one - next);
        next = p[k];
    }
    p[0] = p1;
    Ok(OptProbs { t, p })
}

/// Optimal probabilities for `1 <= t <= 64`.
pub fn solve_opt_probs(t: usize) -> Result<OptProbs<f64>> {
    Ok(solve_opt_probs_dd(t)?.to_f64())
}

/// `lim_{t -> inf} p_{t-k} = (2^{k+1} - 1) / (2^{k+2} - 1)`.
pub fn limiting_prob(k: usize) -> BigRational {
    let one = BigInt::one();
    let num = (BigInt::one() << (k + 1)) - &one;
    let den = (BigInt::one() << (k + 2)) - &one;
    BigRational::new(num, den)
}

#[derive(Clone, Debug, Serialize)]
pub struct RateRow {
    pub t: usize,
    pub k: usize,
    /// `|p_{t-k} - p*_{t-k}|`
    pub error: f64,
    /// `error * 2^{t+k}`
    pub scaled: f64,
    /// `e(t+1, k) / e(t, k)` when `t + 1` is in range.
    pub ratio: Option<f64>,
}

/// Distance of `p_{t-k}` from its limit for each `t` in `t_range` and `k` in `k_set`.
pub fn convergence_rate_check(
    t_range: std::ops::RangeInclusive<usize>,
    k_set: &[usize],
) -> Result<Vec<RateRow>> {
    let err = |t: usize, k: usize| -> Result<f64> {
        let probs = solve_opt_probs_dd(t)?;
        let num = 2f64.powi(k as i32 + 1) - 1.0;
        let den = 2f64.powi(k as i32 + 2) - 1.0;
        let approx = DoubleDouble::new(num) / DoubleDouble::new(den);
        Ok((probs.p[t - k - 1] - approx).magnitude().as_f64())
    };
    let (lo, hi) = (*t_range.start(), *t_range.end());
    let mut rows = Vec::new();
    for &k in k_set {
        for t in lo..=hi {
            if t <= k {
                continue;
            }
            let e = err(t, k)?;
            let ratio = if t < hi { Some(err(t + 1, k)? / e) } else { None };
            rows.push(RateRow { t, k, error: e, scaled: e * 2f64.powi((t + k) as i32), ratio });
        }
    }
    Ok(rows)
}

/// Spread `max - min` of the log sampling probability over all of `F_{n,t,1}`
/// under the optimal weighted sampler (band `s = t` below, `1` above).
pub fn verify_bounded_ratio(t: usize, n: usize) -> Result<f64> {
    let spec = BandSpec::new(t, 1, n)?;
    let probs = solve_opt_probs(t)?;
    let sampler = Sampler::weighted_t1(spec, &probs)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    sampler.for_each_path(|_, lp| {
        lo = lo.min(lp);
        hi = hi.max(lp);
    });
    Ok(hi - lo)
}

/// Per-state move distribution `p_{x,j} = v(T_j x) / sum_k v(T_k x)`.
#[derive(Clone, Debug, Serialize)]
pub struct LimitingKernel<T> {
    pub s: usize,
    pub t: usize,
    /// `probs[x]` lists `(j, next state index, p_{x,j})`.
    pub probs: Vec<Vec<(usize, usize, T)>>,
}

pub fn limiting_kernel(s: usize, t: usize) -> Result<LimitingKernel<f64>> {
    let space = StateSpace::new(s, t)?;
    let spec = perron_for::<f64>(&space)?;
    let probs = (0..space.len())
        .map(|x| {
            let moves = space.moves(x);
            let total: f64 = moves.iter().map(|m| spec.v[m.next]).sum();
            moves.iter().map(|m| (m.j, m.next, spec.v[m.next] / total)).collect()
        })
        .collect();
    Ok(LimitingKernel { s, t, probs })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjectureReport {
    pub s: usize,
    pub t: usize,
    /// `(n, max_pi 1 / (|M| mu*(pi)))`
    pub ratios: Vec<(usize, f64)>,
}

/// Exhaustive worst-case weight ratio of the limiting sampler for `n = 1..=n_max`.
pub fn conjecture_experiment(s: usize, t: usize, n_max: usize) -> Result<ConjectureReport> {
    if n_max > 12 {
        return Err(Error::SizeLimit { what: "conjecture_experiment", limit: 12, n: n_max });
    }
    let lk = limiting_kernel(s, t)?;
    let mut ratios = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let spec = BandSpec::new(s, t, n)?;
        let sampler = Sampler::limiting(spec, &lk)?;
        let mut worst = f64::NEG_INFINITY;
        sampler.for_each_path(|_, lp| worst = worst.max(-lp));
        let log_m = ln_biguint(&crate::counting::count_matchings(spec)?);
        ratios.push((n, (worst - log_m).exp()));
    }
    Ok(ConjectureReport { s, t, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;

fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

    const TABLE3: [&[f64]; 9] = [
        &[0.38196],
        &[0.45631, 0.35220],
        &[0.48120, 0.44069, 0.34158],
        &[0.49133, 0.47340, 0.43419, 0.33716],
        &[0.49586, 0.48744, 0.46989, 0.43126, 0.33516],
        &[0.49798, 0.49391, 0.48561, 0.46824, 0.42988, 0.33422],
        &[0.49900, 0.49700, 0.49297, 0.48473, 0.46744, 0.42922, 0.33377],
        &[0.49950, 0.49851, 0.49653, 0.49251, 0.48429, 0.46705, 0.42889, 0.33355],
        &[0.49975, 0.49926, 0.49827, 0.49629, 0.49228, 0.48408, 0.46685, 0.42873, 0.33344],
    ];

    #[test]
    fn tabulated_values() {
        for (row, want) in TABLE3.iter().enumerate() {
            let got = solve_opt_probs(row + 1).unwrap();
            for (g, w) in got.p.iter().zip(want.iter()) {
                assert!((g - w).abs() <= 1e-5 + 1e-12, "t={} {g} vs {w}", row + 1);
            }
        }
    }

    #[test]
    fn first_rows() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let p = solve_opt_probs(1).unwrap();
        assert!((p.p[0] - 1.0 / (phi * phi)).abs() < 1e-14);
        let p = solve_opt_probs(2).unwrap();
        assert!((p.p[0] - 0.45631).abs() < 1e-5 && (p.p[1] - 0.35220).abs() < 1e-5);
        let p = solve_opt_probs(9).unwrap();
        assert!((p.p[0] - 0.49975).abs() < 1e-5 && (p.p[8] - 0.33344).abs() < 1e-5);
    }

    #[test]
    fn residuals_and_ordering() {
        for t in 1..=MAX_OPT_T {
            let p = solve_opt_probs_dd(t).unwrap();
            assert!(p.residual().as_f64() < 1e-12, "t={t}");
            // Adjacent entries near 1/2 differ by less than a double ulp for large t,
            // so the strict chain is checked in double-double.
            let mut prev = DoubleDouble::new(0.5);
            for &v in &p.p {
                assert!(v < prev, "t={t}");
                prev = v;
            }
            assert!(prev > DoubleDouble::new(1.0) / DoubleDouble::new(3.0));
        }
        assert!(solve_opt_probs(0).is_err());
        assert!(solve_opt_probs(65).is_err());
    }

    #[test]
    fn generic_solver_in_f64_agrees_for_small_t() {
        for t in 1..=12 {
            let a = solve_opt_probs_generic::<f64>(t).unwrap();
            let b = solve_opt_probs(t).unwrap();
            for (x, y) in a.p.iter().zip(&b.p) {
                assert!((x - y).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn limiting_probabilities() {
        assert_eq!(limiting_prob(0), BigRational::new(1.into(), 3.into()));
        assert_eq!(limiting_prob(1), BigRational::new(3.into(), 7.into()));
        assert_eq!(limiting_prob(2), BigRational::new(7.into(), 15.into()));
        let p = solve_opt_probs(40).unwrap();
        for k in 0..5 {
            assert!((p.p[40 - k - 1] - rational_to_f64(&limiting_prob(k))).abs() < 1e-9);
        }
    }

    #[test]
    fn pre_asymptotic_error_at_t1() {
        let rows = convergence_rate_check(1..=1, &[0]).unwrap();
        assert!((rows[0].error - 0.0486).abs() < 1e-4);
    }

    #[test]
    fn bounded_ratio_small_cases() {
        assert_eq!(verify_bounded_ratio(2, 1).unwrap(), 0.0);
        assert!(verify_bounded_ratio(1, 8).unwrap() <= 2.0 * 2f64.ln());
    }

    #[test]
    fn limiting_kernel_fibonacci() {
        let lk = limiting_kernel(1, 1).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let space = StateSpace::new(1, 1).unwrap();
        let zero = space.index_of(&crate::states::StateTuple::new(&[0])).unwrap();
        let row = &lk.probs[zero];
        let stay = row.iter().find(|e| e.0 == 1).unwrap().2;
        let up = row.iter().find(|e| e.0 == 0).unwrap().2;
        assert!((stay - 1.0 / phi).abs() < 1e-10);
        assert!((up - 1.0 / (phi * phi)).abs() < 1e-10);
        for s in 1..=3 {
            for t in 1..=3 {
                let lk = limiting_kernel(s, t).unwrap();
                for row in &lk.probs {
                    let total: f64 = row.iter().map(|e| e.2).sum();
                    assert!((total - 1.0).abs() < 1e-12);
                    assert!(row.iter().all(|e| e.2 > 0.0));
                }
            }
        }
    }

    #[test]
    fn finite_kernels_converge_to_the_limit() {
        let spec = BandSpec::new(2, 2, 300).unwrap();
        let ks = crate::chain::kernels(spec).unwrap();
        let lk = limiting_kernel(2, 2).unwrap();
        let i = 300 - 100;
        let mut worst = 0.0f64;
        for (x, row) in ks[i].rows.iter().enumerate() {
            for e in row {
                let lim = lk.probs[x].iter().find(|q| q.0 == e.j).unwrap().2;
                worst = worst.max((e.prob - lim).abs());
            }
        }
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn conjecture_experiment_runs() {
        let r = conjecture_experiment(1, 1, 10).unwrap();
        assert_eq!(r.ratios.len(), 10);
        assert!((r.ratios[0].1 - 1.0).abs() < 1e-12);
        assert!(r.ratios.iter().all(|&(_, v)| (1.0 - 1e-12..10.0).contains(&v)));
        assert!(conjecture_experiment(1, 1, 13).is_err());
    }
}
