//! Sample-size analysis: normal approximation of the forced-move count, the growth
//! constants of `log rho`, predicted sample sizes, and comparisons.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::chain::{exact_theta_moments, extract_constants, UniformSampler};
use crate::counting::{log_count, weighted_count_with, Weighting};
use crate::error::{Error, Result};
use crate::graph::BandSpec;
use crate::sampler::{required_samples, substream};

/// Largest `n` considered by [`crossover_n_star`].
pub const CROSSOVER_LIMIT: usize = 1 << 22;

#[derive(Clone, Debug, Serialize)]
pub struct CltReport {
    pub spec: BandSpec,
    pub n_samples: usize,
    /// Kolmogorov-Smirnov distance between the empirical CDF of `theta` and the
    /// continuity-corrected normal CDF with the exact mean and variance.
    pub ks_statistic: f64,
    pub mean_theta: f64,
    pub var_theta: f64,
    pub sample_mean: f64,
    pub sample_var: f64,
}

/// Draw `n_samples` uniform permutations and measure how far `theta` is from
/// normal. `theta` is integer valued, so the normal CDF is evaluated at `k + 1/2`.
pub fn clt_check(spec: BandSpec, n_samples: usize, seed: u64) -> Result<CltReport> {
    clt_check_with(spec, n_samples, seed, None)
}

pub fn clt_check_with(
    spec: BandSpec,
    n_samples: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<CltReport> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument("at least two samples are required".into()));
    }
    let m = exact_theta_moments(spec)?;
    if m.var_theta <= 0.0 {
        return Err(Error::ConstantDistribution);
    }
    let sampler = UniformSampler::new(spec)?;
    let draw = || -> Vec<usize> {
        (0..n_samples as u64)
            .into_par_iter()
            .map(|k| sampler.sample(&mut substream(seed, k)).theta)
            .collect()
    };
    let thetas = match workers {
        None => draw(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(draw),
    };
    let ks = ks_discrete(&thetas, m.e_theta, m.var_theta.sqrt());
    let nf = n_samples as f64;
    let sample_mean = thetas.iter().map(|&v| v as f64).sum::<f64>() / nf;
    let sample_var =
        thetas.iter().map(|&v| (v as f64 - sample_mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(CltReport {
        spec,
        n_samples,
        ks_statistic: ks,
        mean_theta: m.e_theta,
        var_theta: m.var_theta,
        sample_mean,
        sample_var,
    })
}

/// `max_k |F_N(k) - Phi((k + 1/2 - mu) / sigma)|` over all integers `k`.
pub fn ks_discrete(values: &[usize], mu: f64, sigma: f64) -> f64 {
    let normal = Normal::new(mu, sigma).expect("positive sigma");
    let max = values.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max + 2];
    for &v in values {
        counts[v] += 1;
    }
    let n = values.len() as f64;
    let hi = max.max((mu + 12.0 * sigma).ceil() as usize);
    let mut cum = 0usize;
    let mut worst = normal.cdf(-0.5);
    for k in 0..=hi {
        cum += counts.get(k).copied().unwrap_or(0);
        let d = (cum as f64 / n - normal.cdf(k as f64 + 0.5)).abs();
        worst = worst.max(d);
    }
    worst.min(1.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct Table1Row {
    pub s: usize,
    pub t: usize,
    pub c: f64,
    pub d: f64,
}

/// Growth constants for each band, extracted at `n_big` and `2 n_big`.
pub fn table1(pairs: &[(usize, usize)], n_big: usize) -> Result<Vec<Table1Row>> {
    pairs
        .par_iter()
        .map(|&(s, t)| extract_constants(s, t, n_big).map(|(c, d)| Table1Row { s, t, c, d }))
        .collect()
}

/// `log(n^7 log n)`, the switch-chain reference cost.
pub fn mcmc_reference(n: usize) -> f64 {
    let n = n as f64;
    7.0 * n.ln() + n.ln().ln()
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleSizeRow {
    pub s: usize,
    pub t: usize,
    pub n: usize,
    /// `E log rho + sqrt(Var log rho) + log n`
    pub log_nconv_n: f64,
    pub log_mcmc_reference: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleSizeTable {
    pub rows: Vec<SampleSizeRow>,
    /// `(n, log(n^7 log n))` for each requested `n`.
    pub mcmc: Vec<(usize, f64)>,
}

/// Predicted `log(N_conv n)` for every pair and length.
pub fn table2(pairs: &[(usize, usize)], n_list: &[usize]) -> Result<SampleSizeTable> {
    let jobs: Vec<(usize, usize, usize)> =
        pairs.iter().flat_map(|&(s, t)| n_list.iter().map(move |&n| (s, t, n))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(s, t, n)| {
            let log_nconv_n = predicted_log_cost(BandSpec::new(s, t, n)?)?;
            Ok(SampleSizeRow { s, t, n, log_nconv_n, log_mcmc_reference: mcmc_reference(n) })
        })
        .collect::<Result<Vec<_>>>()?;
    let mcmc = n_list.iter().map(|&n| (n, mcmc_reference(n))).collect();
    Ok(SampleSizeTable { rows, mcmc })
}

fn predicted_log_cost(spec: BandSpec) -> Result<f64> {
    Ok(required_samples(spec)? + (spec.n as f64).ln())
}

#[derive(Clone, Debug, Serialize)]
pub struct NaiveComparison {
    pub spec: BandSpec,
    /// Log of the chi-square divergence of the uniform law from the sampler;
    /// `-inf` when the sampler is exactly uniform.
    pub log_n_naive: f64,
    /// `L + sqrt(Var log rho)`
    pub log_n_el: f64,
}

fn log_expm1(x: f64) -> f64 {
    if x > 40.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// Sample size from the chi-square variance bound versus the `e^L` rule, for the
/// uniform sequential sampler.
pub fn naive_variance_comparison(spec: BandSpec) -> Result<NaiveComparison> {
    if spec.n > crate::counting::EXACT_LIMIT {
        return Err(Error::SizeLimit {
            what: "naive_variance_comparison",
            limit: crate::counting::EXACT_LIMIT,
            n: spec.n,
        });
    }
    let w1 = weighted_count_with(spec, 1.0, Weighting::Sampler)?;
    let w0 = log_count(spec)?;
    let x = (w1 - 2.0 * w0).max(0.0);
    let log_n_naive = if x < 1e-13 { f64::NEG_INFINITY } else { log_expm1(x) };
    Ok(NaiveComparison { spec, log_n_naive, log_n_el: required_samples(spec)? })
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossoverReport {
    pub s: usize,
    pub t: usize,
    /// Smallest `n` whose predicted `log(N_conv n)` reaches `log(n^7 log n)`.
    pub n_star: usize,
    /// Predicted `log N_conv` at `n_star`.
    pub log_nconv: f64,
}

/// Length at which the predicted importance-sampling cost overtakes the MCMC
/// reference cost.
pub fn crossover_n_star(s: usize, t: usize) -> Result<CrossoverReport> {
    let excess = |n: usize| -> Result<f64> {
        Ok(predicted_log_cost(BandSpec::new(s, t, n)?)? - mcmc_reference(n))
    };
    let mut lo = 16;
    if excess(lo)? >= 0.0 {
        lo = 2;
    }
    let mut hi = lo * 2;
    while excess(hi)? < 0.0 {
        lo = hi;
        hi *= 2;
        if hi > CROSSOVER_LIMIT {
            return Err(Error::NonConvergence("crossover search"));
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if excess(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let spec = BandSpec::new(s, t, hi)?;
    Ok(CrossoverReport { s, t, n_star: hi, log_nconv: required_samples(spec)? })
}
