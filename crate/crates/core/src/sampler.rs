//! Sequential importance samplers and the importance-sampling estimator.
//!
//! Every banded sampler walks the state chain one left vertex at a time and picks
//! a move from a distribution over the legal moves (chain-legal and matching a
//! right vertex `<= n`). They differ only in that distribution:
//!
//! * `Uniform` / `Sequence`: uniform over the legal moves. On a band graph the legal
//!   moves are exactly the feasibility-preserving edges, so this is the sequential
//!   algorithm with uniform edge choice.
//! * `OptT1`: for `t = 1`, from state `(-(k-1))` move up (to `i + 1`) with
//!   probability `p_k` and down with `1 - p_k`.
//! * `Limiting`: `p_{x,j}` proportional to the Perron vector at `T_j(x)`.
//!
//! General graphs use uniform choice among edges that keep a perfect matching
//! feasible, checked with a maximum matching per candidate.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::exact_theta_moments;
use crate::error::{Error, Result};
use crate::graph::{has_perfect_matching, is_permutation, maximum_matching_size, BandSpec, BipartiteGraph};
use crate::optprob::{limiting_kernel, solve_opt_probs, LimitingKernel, OptProbs};
use crate::scalar::log_sum_exp;
use crate::states::{encode_indices, Move, StateSpace};

/// Number of jackknife batches.
pub const JACKKNIFE_BATCHES: usize = 32;

/// One sequential draw.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedSample {
    pub permutation: Vec<usize>,
    /// Log probability of drawing this permutation.
    pub log_mu: f64,
    /// Forced moves: steps out of a state containing `-s` for band graphs, steps
    /// with a single feasible edge for general graphs.
    pub theta: usize,
}

/// Log-domain importance-sampling estimate of a matching count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ISEstimate {
    pub log_estimate: f64,
    pub n_samples: usize,
    /// Jackknife standard error of `log_estimate`; infinite (serialized as null)
    /// for a single sample.
    pub stderr_log: f64,
    pub ess: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Uniform,
    Sequence,
    OptT1,
    Limiting,
}

impl FromStr for SamplerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(SamplerKind::Uniform),
            "sequence" => Ok(SamplerKind::Sequence),
            "opt-t1" => Ok(SamplerKind::OptT1),
            "limiting" => Ok(SamplerKind::Limiting),
            other => Err(Error::InvalidArgument(format!("unknown sampler '{other}'"))),
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerKind::Uniform => "uniform",
            SamplerKind::Sequence => "sequence",
            SamplerKind::OptT1 => "opt-t1",
            SamplerKind::Limiting => "limiting",
        })
    }
}

/// What to sample matchings of.
#[derive(Clone, Copy, Debug)]
pub enum Source<'a> {
    Band(BandSpec),
    Graph(&'a BipartiteGraph),
}

#[derive(Clone, Debug)]
enum Rule {
    Uniform,
    /// `p[k-1]` is the up-move probability from state `(-(k-1))`.
    WeightedT1(Vec<f64>),
    /// Unnormalized weight of each chain-legal move, aligned with `space.moves(x)`.
    Limiting(Vec<Vec<f64>>),
}

#[derive(Clone, Debug)]
enum Engine<'a> {
    Band { spec: BandSpec, space: StateSpace, rule: Rule },
    Graph(&'a BipartiteGraph),
}

/// A prepared sampler: tables are built once and shared across draws.
#[derive(Clone, Debug)]
pub struct Sampler<'a> {
    kind: SamplerKind,
    engine: Engine<'a>,
}

impl<'a> Sampler<'a> {
    pub fn new(kind: SamplerKind, source: Source<'a>) -> Result<Self> {
        match source {
            Source::Graph(g) => {
                if kind != SamplerKind::Uniform {
                    return Err(Error::InvalidArgument(format!(
                        "sampler '{kind}' requires a band specification"
                    )));
                }
                g.order()?;
                if !has_perfect_matching(g) {
                    return Err(Error::NoPerfectMatching);
                }
                Ok(Sampler { kind, engine: Engine::Graph(g) })
            }
            Source::Band(spec) => {
                let space = StateSpace::new(spec.s, spec.t)?;
                let rule = match kind {
                    SamplerKind::Uniform | SamplerKind::Sequence => Rule::Uniform,
                    SamplerKind::OptT1 => {
                        if spec.t != 1 {
                            return Err(Error::WrongT(spec.t));
                        }
                        let probs = solve_opt_probs(spec.s)?;
                        Rule::WeightedT1(probs.p)
                    }
                    SamplerKind::Limiting => {
                        let lk = limiting_kernel(spec.s, spec.t)?;
                        limiting_rule(&space, &lk)
                    }
                };
                Ok(Sampler { kind, engine: Engine::Band { spec, space, rule } })
            }
        }
    }

    /// Weighted `t = 1` sampler with caller-supplied probabilities (`len == s`).
    pub fn weighted_t1(spec: BandSpec, probs: &OptProbs<f64>) -> Result<Sampler<'static>> {
        if spec.t != 1 {
            return Err(Error::WrongT(spec.t));
        }
        if probs.p.len() != spec.s {
            return Err(Error::ProbLength { expected: spec.s, got: probs.p.len() });
        }
        let space = StateSpace::new(spec.s, 1)?;
        Ok(Sampler {
            kind: SamplerKind::OptT1,
            engine: Engine::Band { spec, space, rule: Rule::WeightedT1(probs.p.clone()) },
        })
    }

    /// Limiting-kernel sampler with a caller-supplied kernel.
    pub fn limiting(spec: BandSpec, lk: &LimitingKernel<f64>) -> Result<Sampler<'static>> {
        if (lk.s, lk.t) != (spec.s, spec.t) {
            return Err(Error::InvalidArgument(format!(
                "limiting kernel for ({}, {}) used with {spec}",
                lk.s, lk.t
            )));
        }
        let space = StateSpace::new(spec.s, spec.t)?;
        let rule = limiting_rule(&space, lk);
        Ok(Sampler { kind: SamplerKind::Limiting, engine: Engine::Band { spec, space, rule } })
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        match &self.engine {
            Engine::Band { spec, .. } => spec.n,
            Engine::Graph(g) => g.n_left(),
        }
    }

    /// Probabilities of the legal moves out of state `x` at step `i` (vertex `i + 1`).
    pub(crate) fn distribution(&self, i: usize, x: usize, out: &mut Vec<(Move, f64)>) {
        out.clear();
        let Engine::Band { spec, space, rule } = &self.engine else {
            unreachable!("distribution on a general graph")
        };
        let n = spec.n;
        out.extend(space.legal_moves(x, i + 1, n).map(|m| (*m, 0.0)));
        match rule {
            Rule::Uniform => {
                let p = 1.0 / out.len() as f64;
                out.iter_mut().for_each(|e| e.1 = p);
            }
            Rule::WeightedT1(p) => {
                if out.len() == 1 {
                    out[0].1 = 1.0;
                } else {
                    let e = space.state(x).entries()[0];
                    let up = p[(-e) as usize];
                    for m in out.iter_mut() {
                        m.1 = if m.0.j == 0 { up } else { 1.0 - up };
                    }
                }
            }
            Rule::Limiting(w) => {
                let moves = space.moves(x);
                let weight = |m: &Move| w[x][moves.iter().position(|q| q.j == m.j).unwrap()];
                let total: f64 = out.iter().map(|(m, _)| weight(m)).sum();
                for e in out.iter_mut() {
                    e.1 = weight(&e.0) / total;
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> WeightedSample {
        match &self.engine {
            Engine::Graph(g) => sample_graph(g, rng),
            Engine::Band { spec, space, .. } => {
                let n = spec.n;
                let mut x = space.initial();
                let mut permutation = Vec::with_capacity(n);
                let mut log_mu = 0.0;
                let mut theta = 0;
                let mut dist = Vec::with_capacity(spec.t + 1);
                for i in 0..n {
                    if space.is_forced(x) {
                        theta += 1;
                    }
                    self.distribution(i, x, &mut dist);
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut pick = dist[dist.len() - 1];
                    for &(m, p) in &dist {
                        acc += p;
                        if u < acc {
                            pick = (m, p);
                            break;
                        }
                    }
                    log_mu += pick.1.ln();
                    permutation.push((i as i64 + 1 + pick.0.offset as i64) as usize);
                    x = pick.0.next;
                }
                WeightedSample { permutation, log_mu, theta }
            }
        }
    }

    /// Log probability that this sampler outputs `perm` (`-inf` if it never does).
    pub fn log_prob(&self, perm: &[usize]) -> Result<f64> {
        match &self.engine {
            Engine::Graph(g) => log_prob_graph(g, perm),
            Engine::Band { spec, space, .. } => {
                let (path, moves) = encode_indices(space, perm, *spec)?;
                let mut dist = Vec::new();
                let mut lp = 0.0;
                for (i, mv) in moves.iter().enumerate() {
                    self.distribution(i, path[i], &mut dist);
                    match dist.iter().find(|(m, _)| m.j == mv.j) {
                        Some(&(_, p)) if p > 0.0 => lp += p.ln(),
                        _ => return Ok(f64::NEG_INFINITY),
                    }
                }
                Ok(lp)
            }
        }
    }

    /// Visit every complete path of the sampler tree with its log probability.
    pub(crate) fn for_each_path(&self, mut f: impl FnMut(&[usize], f64)) {
        let Engine::Band { spec, space, .. } = &self.engine else {
            unreachable!("path enumeration on a general graph")
        };
        let mut perm = Vec::with_capacity(spec.n);
        self.dfs(spec.n, 0, space.initial(), 0.0, &mut perm, &mut f);
    }

    fn dfs(
        &self,
        n: usize,
        i: usize,
        x: usize,
        lp: f64,
        perm: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize], f64),
    ) {
        if i == n {
            f(perm, lp);
            return;
        }
        let mut dist = Vec::new();
        self.distribution(i, x, &mut dist);
        for (m, p) in dist {
            if p <= 0.0 {
                continue;
            }
            perm.push((i as i64 + 1 + m.offset as i64) as usize);
            self.dfs(n, i + 1, m.next, lp + p.ln(), perm, f);
            perm.pop();
        }
    }
}

fn limiting_rule(space: &StateSpace, lk: &LimitingKernel<f64>) -> Rule {
    Rule::Limiting(
        (0..space.len())
            .map(|x| {
                space
                    .moves(x)
                    .iter()
                    .map(|m| lk.probs[x].iter().find(|e| e.0 == m.j).map_or(0.0, |e| e.2))
                    .collect()
            })
            .collect(),
    )
}

/// Right vertices `j` (0-based) adjacent to left vertex `i` whose choice keeps a
/// perfect matching of the rest feasible.
fn feasible_edges(g: &BipartiteGraph, i: usize, used_left: &mut [bool], used_right: &mut [bool]) -> Vec<usize> {
    let n = g.n_left();
    let mut out = Vec::new();
    used_left[i] = true;
    for j in 0..n {
        if used_right[j] || !g.edge0(i, j) {
            continue;
        }
        used_right[j] = true;
        if maximum_matching_size(g, used_left, used_right) == n - i - 1 {
            out.push(j);
        }
        used_right[j] = false;
    }
    used_left[i] = false;
    out
}

fn sample_graph<R: Rng + ?Sized>(g: &BipartiteGraph, rng: &mut R) -> WeightedSample {
    let n = g.n_left();
    let mut used_left = vec![false; n];
    let mut used_right = vec![false; n];
    let mut permutation = Vec::with_capacity(n);
    let mut log_mu = 0.0;
    let mut theta = 0;
    for i in 0..n {
        let cand = feasible_edges(g, i, &mut used_left, &mut used_right);
        if cand.len() == 1 {
            theta += 1;
        }
        let u: f64 = rng.random();
        let k = ((u * cand.len() as f64) as usize).min(cand.len() - 1);
        let j = cand[k];
        log_mu -= (cand.len() as f64).ln();
        used_left[i] = true;
        used_right[j] = true;
        permutation.push(j + 1);
    }
    WeightedSample { permutation, log_mu, theta }
}

fn log_prob_graph(g: &BipartiteGraph, perm: &[usize]) -> Result<f64> {
    let n = g.n_left();
    if perm.len() != n || !is_permutation(perm) {
        return Err(Error::NotAPermutation(n));
    }
    let mut used_left = vec![false; n];
    let mut used_right = vec![false; n];
    let mut lp = 0.0;
    for (i, &p) in perm.iter().enumerate() {
        let cand = feasible_edges(g, i, &mut used_left, &mut used_right);
        if !cand.contains(&(p - 1)) {
            return Ok(f64::NEG_INFINITY);
        }
        lp -= (cand.len() as f64).ln();
        used_left[i] = true;
        used_right[p - 1] = true;
    }
    Ok(lp)
}

/// Algorithm-1 style draw: uniform among feasibility-preserving edges.
pub fn sis_uniform<R: Rng + ?Sized>(source: Source<'_>, rng: &mut R) -> Result<WeightedSample> {
    Ok(Sampler::new(SamplerKind::Uniform, source)?.sample(rng))
}

/// Sequence-form draw: uniform among legal state transitions.
pub fn sis_sequence<R: Rng + ?Sized>(spec: BandSpec, rng: &mut R) -> Result<WeightedSample> {
    Ok(Sampler::new(SamplerKind::Sequence, Source::Band(spec))?.sample(rng))
}

/// Weighted draw for `t = 1` with up-move probabilities `probs`.
pub fn sis_weighted_t1<R: Rng + ?Sized>(
    spec: BandSpec,
    probs: &OptProbs<f64>,
    rng: &mut R,
) -> Result<WeightedSample> {
    Ok(Sampler::weighted_t1(spec, probs)?.sample(rng))
}

/// Draw with the state-dependent limiting move distribution.
pub fn sis_limiting<R: Rng + ?Sized>(spec: BandSpec, rng: &mut R) -> Result<WeightedSample> {
    Ok(Sampler::new(SamplerKind::Limiting, Source::Band(spec))?.sample(rng))
}

/// Generator for sample `index` of a run seeded with `seed`: ChaCha8 keyed by the
/// seed, with the sample index as stream id.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Estimate the number of perfect matchings from `n_samples` draws.
pub fn estimate_count(
    kind: SamplerKind,
    source: Source<'_>,
    n_samples: usize,
    seed: u64,
) -> Result<ISEstimate> {
    let sampler = Sampler::new(kind, source)?;
    estimate_with(&sampler, n_samples, seed, None)
}

/// Draw `n_samples` log-weights in parallel; sample `k` uses [`substream`]`(seed, k)`.
pub fn log_weights(sampler: &Sampler<'_>, n_samples: usize, seed: u64, workers: Option<usize>) -> Result<Vec<f64>> {
    let run = || -> Vec<f64> {
        (0..n_samples as u64)
            .into_par_iter()
            .map(|k| -sampler.sample(&mut substream(seed, k)).log_mu)
            .collect()
    };
    match workers {
        None => Ok(run()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(pool.install(run))
        }
    }
}

pub fn estimate_with(
    sampler: &Sampler<'_>,
    n_samples: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<ISEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    let lw = log_weights(sampler, n_samples, seed, workers)?;
    Ok(summarize(&lw))
}

/// Estimate, jackknife standard error and ESS from log-weights.
pub fn summarize(lw: &[f64]) -> ISEstimate {
    let n = lw.len();
    let total = log_sum_exp(lw);
    let log_estimate = total - (n as f64).ln();
    let sq: Vec<f64> = lw.iter().map(|w| 2.0 * w).collect();
    let ess = (2.0 * total - log_sum_exp(&sq)).exp().min(n as f64);
    let stderr_log = if n < 2 { f64::INFINITY } else { jackknife(lw, total) };
    ISEstimate { log_estimate, n_samples: n, stderr_log, ess }
}

/// Delete-a-batch jackknife of the log estimate; the remainder of `N / B` is
/// folded into the last batch.
fn jackknife(lw: &[f64], total: f64) -> f64 {
    let n = lw.len();
    let b = JACKKNIFE_BATCHES.min(n);
    let size = n / b;
    let loo: Vec<f64> = (0..b)
        .map(|k| {
            let lo = k * size;
            let hi = if k == b - 1 { n } else { lo + size };
            let batch = log_sum_exp(&lw[lo..hi]);
            let rest = total + (-(batch - total).exp()).ln_1p();
            rest - ((n - (hi - lo)) as f64).ln()
        })
        .collect();
    if loo.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let mean = loo.iter().sum::<f64>() / b as f64;
    let ss: f64 = loo.iter().map(|v| (v - mean) * (v - mean)).sum();
    ((b as f64 - 1.0) / b as f64 * ss).sqrt()
}

/// Log of the recommended sample size, `L + sqrt(Var log rho)`.
pub fn required_samples(spec: BandSpec) -> Result<f64> {
    let m = exact_theta_moments(spec)?;
    Ok(m.e_log_rho + m.var_log_rho.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{count_matchings, ln_biguint};
    use crate::graph::{band_graph, enumerate_matchings};
    use crate::states::encode_permutation;

    fn spec(s: usize, t: usize, n: usize) -> BandSpec {
        BandSpec::new(s, t, n).unwrap()
    }

    #[test]
    fn fibonacci_choices_are_halves() {
        let mut rng = substream(3, 0);
        for _ in 0..100 {
            let w = sis_uniform(Source::Band(spec(1, 1, 15)), &mut rng).unwrap();
            let k = (-w.log_mu / 2f64.ln()).round();
            assert!((w.log_mu + k * 2f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn sequence_weight_formula_away_from_the_boundary() {
        // Every step except the final t has all t+1 moves available.
        let sp = spec(2, 2, 12);
        let sampler = Sampler::new(SamplerKind::Sequence, Source::Band(sp)).unwrap();
        let mut rng = substream(1, 1);
        for _ in 0..50 {
            let w = sampler.sample(&mut rng);
            let path = encode_permutation(&w.permutation, sp).unwrap();
            assert_eq!(path.theta(2), w.theta);
            assert!(w.log_mu <= 0.0);
            assert!((w.log_mu - sampler.log_prob(&w.permutation).unwrap()).abs() < 1e-12);
        }
        let w = sis_sequence(spec(2, 2, 1), &mut rng).unwrap();
        assert_eq!((w.theta, w.log_mu), (0, 0.0));
    }

    #[test]
    fn sampler_probabilities_sum_to_one() {
        for kind in [SamplerKind::Uniform, SamplerKind::Sequence, SamplerKind::Limiting] {
            for (s, t, n) in [(1, 1, 7), (2, 2, 6), (2, 1, 8), (1, 2, 8)] {
                let sp = spec(s, t, n);
                let sampler = Sampler::new(kind, Source::Band(sp)).unwrap();
                let perms = enumerate_matchings(&band_graph(sp)).unwrap();
                let total: f64 = perms.iter().map(|p| sampler.log_prob(p).unwrap().exp()).sum();
                assert!((total - 1.0).abs() < 1e-12, "{kind} {sp}");
            }
        }
        let sp = spec(2, 1, 8);
        let sampler = Sampler::new(SamplerKind::OptT1, Source::Band(sp)).unwrap();
        let perms = enumerate_matchings(&band_graph(sp)).unwrap();
        let total: f64 = perms.iter().map(|p| sampler.log_prob(p).unwrap().exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_expectation_of_inverse_weight_is_the_count() {
        let sp = spec(2, 2, 7);
        let sampler = Sampler::new(SamplerKind::Limiting, Source::Band(sp)).unwrap();
        let mut expect = 0.0;
        sampler.for_each_path(|_, lp| expect += lp.exp() * (-lp).exp());
        let count = count_matchings(sp).unwrap();
        assert!((expect - ln_biguint(&count).exp()).abs() < 1e-9);
    }

    #[test]
    fn general_graph_sampler() {
        let g = BipartiteGraph::from_strs(&["110", "011", "111"]).unwrap();
        let sampler = Sampler::new(SamplerKind::Uniform, Source::Graph(&g)).unwrap();
        let perms = enumerate_matchings(&g).unwrap();
        let total: f64 = perms.iter().map(|p| sampler.log_prob(p).unwrap().exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let est = estimate_with(&sampler, 4000, 5, None).unwrap();
        assert!((est.log_estimate - 3f64.ln()).abs() < 3.0 * est.stderr_log + 1e-12);

        let bad = BipartiteGraph::from_strs(&["00", "11"]).unwrap();
        assert_eq!(
            Sampler::new(SamplerKind::Uniform, Source::Graph(&bad)).unwrap_err(),
            Error::NoPerfectMatching
        );
        assert!(Sampler::new(SamplerKind::Sequence, Source::Graph(&g)).is_err());
    }

    #[test]
    fn complete_graph_estimate() {
        let g = band_graph(spec(5, 5, 3));
        let sampler = Sampler::new(SamplerKind::Uniform, Source::Graph(&g)).unwrap();
        // Every permutation has probability 1/6 on the complete graph.
        for p in enumerate_matchings(&g).unwrap() {
            assert!((sampler.log_prob(&p).unwrap() + 6f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_t1_validation() {
        let probs = OptProbs { t: 2, p: vec![0.45, 0.35] };
        assert_eq!(Sampler::weighted_t1(spec(2, 2, 5), &probs).unwrap_err(), Error::WrongT(2));
        assert_eq!(
            Sampler::weighted_t1(spec(3, 1, 5), &probs).unwrap_err(),
            Error::ProbLength { expected: 3, got: 2 }
        );
        let mut rng = substream(0, 0);
        assert!(sis_weighted_t1(spec(2, 1, 5), &probs, &mut rng).is_ok());
    }

    #[test]
    fn surrogate_infinite_band_is_uniform() {
        let n = 7;
        let sp = spec(n, 1, n);
        let probs = OptProbs { t: n, p: vec![0.5; n] };
        let sampler = Sampler::weighted_t1(sp, &probs).unwrap();
        for p in enumerate_matchings(&band_graph(sp)).unwrap() {
            let lp = sampler.log_prob(&p).unwrap();
            assert!((lp + (n - 1) as f64 * 2f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn estimator_edge_cases() {
        let e = summarize(&[1.0]);
        assert!(e.stderr_log.is_infinite());
        assert_eq!(e.ess, 1.0);
        let e = summarize(&[2.0; 100]);
        assert!((e.log_estimate - 2.0).abs() < 1e-12);
        assert!(e.stderr_log < 1e-12);
        assert!((e.ess - 100.0).abs() < 1e-9);
        // Remainder folded into the last batch.
        let lw: Vec<f64> = (0..70).map(|k| (k % 7) as f64 * 0.1).collect();
        let e = summarize(&lw);
        assert!(e.stderr_log.is_finite() && e.ess <= 70.0);
    }

    #[test]
    fn fibonacci_estimate_is_within_three_standard_errors() {
        let sp = spec(1, 1, 20);
        let est = estimate_count(SamplerKind::Sequence, Source::Band(sp), 20_000, 11).unwrap();
        let exact = ln_biguint(&count_matchings(sp).unwrap());
        assert!((est.log_estimate - exact).abs() <= 3.0 * est.stderr_log);
    }

    #[test]
    fn estimates_do_not_depend_on_worker_count() {
        let sampler = Sampler::new(SamplerKind::Limiting, Source::Band(spec(2, 2, 40))).unwrap();
        let a = estimate_with(&sampler, 999, 42, Some(1)).unwrap();
        let b = estimate_with(&sampler, 999, 42, Some(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn required_samples_values() {
        assert!(required_samples(spec(1, 1, 6)).unwrap() >= 0.0);
        let r = required_samples(spec(2, 1, 1000)).unwrap();
        assert!((r - 20.8).abs() < 1.0, "{r}");
    }
}
