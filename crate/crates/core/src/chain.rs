//! The time-inhomogeneous Markov chain followed by the state sequence of a
//! uniformly random type-(s, t) permutation.

use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use serde::Serialize;

use crate::counting::{completion_table, ratio_f64, ScaledCompletions, EXACT_LIMIT};
use crate::error::{Error, Result};
use crate::graph::BandSpec;
use crate::scalar::Real;
use crate::states::StateSpace;

/// One nonzero entry `K_i(x, T_j x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelEntry<T> {
    pub j: usize,
    pub next: usize,
    /// Offset of the matched right vertex from the current left vertex.
    pub offset: i16,
    pub prob: T,
}

/// Row-stochastic kernel `K_i` over state indices. Rows of states that cannot be
/// completed to a permutation are empty.
#[derive(Clone, Debug)]
pub struct TransitionKernel<T> {
    pub step: usize,
    pub rows: Vec<Vec<KernelEntry<T>>>,
}

impl<T: Clone + Zero> TransitionKernel<T> {
    pub fn entry(&self, x: usize, y: usize) -> T {
        self.rows[x].iter().find(|e| e.next == y).map_or_else(T::zero, |e| e.prob.clone())
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let m = self.rows.len();
        (0..m).map(|x| (0..m).map(|y| self.entry(x, y)).collect()).collect()
    }
}

impl<T: Real> TransitionKernel<T> {
    pub fn row_sum(&self, x: usize) -> T {
        self.rows[x].iter().map(|e| e.prob).sum()
    }
}

fn build_rows<T>(
    space: &StateSpace,
    i: usize,
    n: usize,
    mut prob: impl FnMut(usize, usize) -> Option<T>,
) -> TransitionKernel<T> {
    let rows = (0..space.len())
        .map(|x| {
            space
                .legal_moves(x, i + 1, n)
                .filter_map(|mv| {
                    prob(x, mv.next).map(|p| KernelEntry { j: mv.j, next: mv.next, offset: mv.offset, prob: p })
                })
                .collect::<Vec<_>>()
        })
        .map(|mut row| {
            row.sort_by_key(|e| e.next);
            row
        })
        .collect();
    TransitionKernel { step: i, rows }
}

/// Kernels `K_0, ..., K_{n-1}` in double precision.
pub fn kernels(spec: BandSpec) -> Result<Vec<TransitionKernel<f64>>> {
    kernels_with::<f64>(spec)
}

pub fn kernels_with<T: Real>(spec: BandSpec) -> Result<Vec<TransitionKernel<T>>> {
    let space = StateSpace::new(spec.s, spec.t)?;
    Ok(kernels_for(&space, spec.n))
}

pub(crate) fn kernels_for<T: Real>(space: &StateSpace, n: usize) -> Vec<TransitionKernel<T>> {
    let spec = BandSpec { s: space.s(), t: space.t(), n };
    if n <= EXACT_LIMIT {
        let tab = completion_table(spec).expect("valid spec");
        let c = &tab.completions;
        (0..n)
            .map(|i| {
                build_rows(space, i, n, |x, y| {
                    if c[i][x].is_zero() || c[i + 1][y].is_zero() {
                        None
                    } else {
                        Some(T::lift(ratio_f64(&c[i + 1][y], &c[i][x])))
                    }
                })
            })
            .collect()
    } else {
        let sc = ScaledCompletions::<f64>::new(space, n);
        (0..n)
            .map(|i| {
                let row_total = |x: usize| -> f64 {
                    space.legal_moves(x, i + 1, n).map(|mv| sc.value[i + 1][mv.next]).sum()
                };
                let totals: Vec<f64> = (0..space.len()).map(row_total).collect();
                build_rows(space, i, n, |x, y| {
                    let v = sc.value[i + 1][y];
                    if totals[x] == 0.0 || v == 0.0 {
                        None
                    } else {
                        Some(T::lift(v / totals[x]))
                    }
                })
            })
            .collect()
    }
}

/// Kernels with exact rational entries (intended for small `n`).
pub fn kernels_exact(spec: BandSpec) -> Result<Vec<TransitionKernel<BigRational>>> {
    let tab = completion_table(spec)?;
    let c = &tab.completions;
    let n = spec.n;
    Ok((0..n)
        .map(|i| {
            build_rows(&tab.space, i, n, |x, y| {
                if c[i][x].is_zero() || c[i + 1][y].is_zero() {
                    None
                } else {
                    Some(BigRational::new(c[i + 1][y].clone().into(), c[i][x].clone().into()))
                }
            })
        })
        .collect())
}

/// Distribution of `x_i` for each `i = 0..=n` under the uniform chain.
pub fn marginals<T: Real>(space: &StateSpace, ks: &[TransitionKernel<T>]) -> Vec<Vec<T>> {
    let m = space.len();
    let mut out = Vec::with_capacity(ks.len() + 1);
    let mut cur = vec![T::zero(); m];
    cur[space.initial()] = T::one();
    for k in ks {
        let mut next = vec![T::zero(); m];
        for (x, row) in k.rows.iter().enumerate() {
            if cur[x] == T::zero() {
                continue;
            }
            for e in row {
                next[e.next] += cur[x] * e.prob;
            }
        }
        out.push(cur);
        cur = next;
    }
    out.push(cur);
    out
}

/// Exact sampler for the uniform distribution on `F_{n,s,t}`.
#[derive(Clone, Debug)]
pub struct UniformSampler {
    pub spec: BandSpec,
    pub space: StateSpace,
    pub kernels: Vec<TransitionKernel<f64>>,
}

/// A uniform draw with its state path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniformDraw {
    pub permutation: Vec<usize>,
    pub path: Vec<usize>,
    pub theta: usize,
}

impl UniformSampler {
    pub fn new(spec: BandSpec) -> Result<Self> {
        let space = StateSpace::new(spec.s, spec.t)?;
        let kernels = kernels_for(&space, spec.n);
        Ok(UniformSampler { spec, space, kernels })
    }

    /// Successor of `x` at step `i` for the uniform variate `u`: CDF walk over the
    /// row in state-index order.
    pub fn step(&self, i: usize, x: usize, u: f64) -> &KernelEntry<f64> {
        let row = &self.kernels[i].rows[x];
        let mut acc = 0.0;
        for e in row {
            acc += e.prob;
            if u < acc {
                return e;
            }
        }
        row.last().expect("step from a state with no completion")
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> UniformDraw {
        let n = self.spec.n;
        let mut x = self.space.initial();
        let mut permutation = Vec::with_capacity(n);
        let mut path = Vec::with_capacity(n + 1);
        let mut theta = 0;
        path.push(x);
        for i in 0..n {
            if self.space.is_forced(x) {
                theta += 1;
            }
            let e = self.step(i, x, rng.random::<f64>());
            permutation.push((i as i64 + 1 + e.offset as i64) as usize);
            x = e.next;
            path.push(x);
        }
        UniformDraw { permutation, path, theta }
    }
}

/// Draw one uniform permutation of `F_{n,s,t}`. Builds the kernels on every call;
/// use [`UniformSampler`] for repeated draws.
pub fn sample_uniform<R: Rng + ?Sized>(spec: BandSpec, rng: &mut R) -> Result<Vec<usize>> {
    Ok(UniformSampler::new(spec)?.sample(rng).permutation)
}

/// Exact moments of the forced-move count `theta` and of `log rho` under the
/// uniform distribution.
#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub spec: BandSpec,
    #[serde(rename = "E_theta")]
    pub e_theta: f64,
    #[serde(rename = "Var_theta")]
    pub var_theta: f64,
    #[serde(rename = "E_log_rho")]
    pub e_log_rho: f64,
    #[serde(rename = "Var_log_rho")]
    pub var_log_rho: f64,
    /// `(n - E theta) log(t + 1) / n`
    pub c: f64,
    /// `Var log rho / n`
    pub d: f64,
    pub log_count: f64,
}

/// First and second moments of `theta` from one forward pass carrying
/// `(mass, E[theta; x], E[theta^2; x])` per state.
pub fn theta_moments_for<T: Real>(space: &StateSpace, ks: &[TransitionKernel<T>]) -> (T, T) {
    let m = space.len();
    let mut mass = vec![T::zero(); m];
    let mut m1 = vec![T::zero(); m];
    let mut m2 = vec![T::zero(); m];
    mass[space.initial()] = T::one();
    let two = T::one() + T::one();
    for k in ks {
        let mut nm = vec![T::zero(); m];
        let mut n1 = vec![T::zero(); m];
        let mut n2 = vec![T::zero(); m];
        for (x, row) in k.rows.iter().enumerate() {
            if mass[x] == T::zero() {
                continue;
            }
            let (a, b, c) = if space.is_forced(x) {
                (mass[x], m1[x] + mass[x], m2[x] + two * m1[x] + mass[x])
            } else {
                (mass[x], m1[x], m2[x])
            };
            for e in row {
                nm[e.next] += e.prob * a;
                n1[e.next] += e.prob * b;
                n2[e.next] += e.prob * c;
            }
        }
        mass = nm;
        m1 = n1;
        m2 = n2;
    }
    let e1: T = m1.iter().copied().sum();
    let e2: T = m2.iter().copied().sum();
    (e1, (e2 - e1 * e1).max(T::zero()))
}

pub fn exact_theta_moments(spec: BandSpec) -> Result<MomentReport> {
    let space = StateSpace::new(spec.s, spec.t)?;
    let ks = kernels_for::<f64>(&space, spec.n);
    let (e_theta, var_theta) = theta_moments_for(&space, &ks);
    let log_count = crate::counting::log_count(spec)?;
    Ok(moment_report(spec, e_theta, var_theta, log_count))
}

fn moment_report(spec: BandSpec, e_theta: f64, var_theta: f64, log_count: f64) -> MomentReport {
    let n = spec.n as f64;
    let lt = ((spec.t + 1) as f64).ln();
    let g = (n - e_theta) * lt;
    MomentReport {
        spec,
        e_theta,
        var_theta,
        e_log_rho: g - log_count,
        var_log_rho: lt * lt * var_theta,
        c: g / n,
        d: lt * lt * var_theta / n,
        log_count,
    }
}

/// Growth constants `(c, d)` of `E log rho` and `Var log rho`, by differencing the
/// exact moments at `n_big` and `2 n_big`.
pub fn extract_constants(s: usize, t: usize, n_big: usize) -> Result<(f64, f64)> {
    if n_big < 1024 || !n_big.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "n_big must be a power of two >= 1024, got {n_big}"
        )));
    }
    let a = exact_theta_moments(BandSpec::new(s, t, n_big)?)?;
    let b = exact_theta_moments(BandSpec::new(s, t, 2 * n_big)?)?;
    let n = n_big as f64;
    let lt = ((t + 1) as f64).ln();
    let g = |r: &MomentReport| (r.spec.n as f64 - r.e_theta) * lt;
    let c = (g(&b) - g(&a)) / n;
    let d = (b.var_log_rho - a.var_log_rho) / n;
    Ok((c, d))
}

/// Per-step maximal correlations of the uniform chain.
#[derive(Clone, Debug, Serialize)]
pub struct CorrelationReport {
    pub spec: BandSpec,
    /// Maximal correlation between `x_i` and `x_{i+1}`, for `i = 0..n`.
    pub rho: Vec<f64>,
    pub min_gap: f64,
    /// Smallest positive kernel entry over reachable rows at steps `i <= n - (s + t)`.
    pub epsilon_kernel: f64,
}

/// Singular values of a dense matrix by one-sided Jacobi rotations, sorted descending.
pub fn singular_values(a: &[Vec<f64>]) -> Vec<f64> {
    let rows = a.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = a[0].len();
    // Work on columns.
    let mut u: Vec<Vec<f64>> = (0..cols).map(|c| (0..rows).map(|r| a[r][c]).collect()).collect();
    let tol = 1e-12;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = u[p].iter().map(|v| v * v).sum();
                let beta: f64 = u[q].iter().map(|v| v * v).sum();
                let gamma: f64 = u[p].iter().zip(&u[q]).map(|(a, b)| a * b).sum();
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let tt = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let tt = if zeta == 0.0 { 1.0 } else { tt };
                let c = 1.0 / (1.0 + tt * tt).sqrt();
                let s = c * tt;
                let (lo, hi) = u.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = c * a - s * b;
                    *y = s * a + c * b;
                }
            }
        }
        if off <= tol {
            break;
        }
    }
    let mut sv: Vec<f64> = u.iter().map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Maximal correlation of `(X, Y)` with `X ~ pi` and `Y | X=x ~ k[x]`: the second
/// singular value of `pi(x) k(x,y) / sqrt(pi(x) q(y))`.
pub fn maximal_correlation(pi: &[f64], k: &[Vec<f64>]) -> f64 {
    let m_out = k.first().map_or(0, |r| r.len());
    let mut q = vec![0.0; m_out];
    for (x, row) in k.iter().enumerate() {
        for (y, &p) in row.iter().enumerate() {
            q[y] += pi[x] * p;
        }
    }
    let xs: Vec<usize> = (0..pi.len()).filter(|&x| pi[x] > 0.0).collect();
    let ys: Vec<usize> = (0..m_out).filter(|&y| q[y] > 0.0).collect();
    if xs.len() < 2 || ys.len() < 2 {
        return 0.0;
    }
    let b: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| ys.iter().map(|&y| pi[x] * k[x][y] / (pi[x] * q[y]).sqrt()).collect())
        .collect();
    let sv = singular_values(&b);
    sv.get(1).copied().unwrap_or(0.0).min(1.0)
}

pub fn max_correlation(spec: BandSpec) -> Result<CorrelationReport> {
    let space = StateSpace::new(spec.s, spec.t)?;
    let ks = kernels_for::<f64>(&space, spec.n);
    let pis = marginals(&space, &ks);
    let rho: Vec<f64> = ks
        .iter()
        .enumerate()
        .map(|(i, k)| maximal_correlation(&pis[i], &k.to_dense()))
        .collect();
    let max_rho = rho.iter().copied().fold(0.0, f64::max);
    let last = spec.n.saturating_sub(spec.s + spec.t);
    let mut epsilon_kernel = f64::INFINITY;
    for (i, k) in ks.iter().enumerate().take(last + 1) {
        for (x, row) in k.rows.iter().enumerate() {
            if pis[i][x] > 0.0 {
                for e in row {
                    if e.prob > 0.0 {
                        epsilon_kernel = epsilon_kernel.min(e.prob);
                    }
                }
            }
        }
    }
    Ok(CorrelationReport { spec, rho, min_gap: 1.0 - max_rho, epsilon_kernel })
}

/// Empirical distribution of the coupling time of the uniform chain with an
/// independent resample of its suffix.
#[derive(Clone, Debug, Serialize)]
pub struct CouplingReport {
    pub spec: BandSpec,
    pub trials: usize,
    /// Mean of `(tau - I)^2`.
    pub second_moment: f64,
    /// `4 (s + t)^2 / epsilon_kernel^2`
    pub bound: f64,
    pub epsilon_kernel: f64,
    /// Empirical `P(tau - I > 10 (s + t))`.
    pub tail_prob: f64,
    /// `survival[k] = P(tau - I > k)`.
    pub survival: Vec<f64>,
    /// Whether `survival[k] <= 2 * 2^{-k / (s + t)}` for every `k`.
    pub geometric_tail: bool,
}

/// For `trials` draws: sample a uniform path `X`, pick `I` uniformly in `0..n`,
/// restart a second chain from `X_I` with independent moves, and record the first
/// step `tau > I` where the chains agree (`n + 1` if they never do).
pub fn coupling_time_test<R: Rng + ?Sized>(
    spec: BandSpec,
    rng: &mut R,
    trials: usize,
) -> Result<CouplingReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let sampler = UniformSampler::new(spec)?;
    let corr = max_correlation(spec)?;
    let n = spec.n;
    let w = spec.s + spec.t;
    let mut gaps = Vec::with_capacity(trials);
    for _ in 0..trials {
        let draw = sampler.sample(rng);
        let i0 = rng.random_range(0..n);
        let mut y = draw.path[i0];
        let mut tau = n + 1;
        for k in i0..n {
            y = sampler.step(k, y, rng.random::<f64>()).next;
            if y == draw.path[k + 1] {
                tau = k + 1;
                break;
            }
        }
        gaps.push(tau - i0);
    }
    let second_moment = gaps.iter().map(|&g| (g * g) as f64).sum::<f64>() / trials as f64;
    let horizon = 20 * w;
    let survival: Vec<f64> = (0..=horizon)
        .map(|k| gaps.iter().filter(|&&g| g > k).count() as f64 / trials as f64)
        .collect();
    let geometric_tail =
        survival.iter().enumerate().all(|(k, &sv)| sv <= 2.0 * 0.5f64.powf(k as f64 / w as f64));
    let eps = corr.epsilon_kernel;
    Ok(CouplingReport {
        spec,
        trials,
        second_moment,
        bound: 4.0 * (w * w) as f64 / (eps * eps),
        epsilon_kernel: eps,
        tail_prob: survival[10 * w],
        survival,
        geometric_tail,
    })
}

/// Exact `C_{i+1}(y) / C_i(x)` check helper: largest relative deviation between the
/// double and rational kernels.
pub fn kernel_precision(spec: BandSpec) -> Result<f64> {
    let f = kernels(spec)?;
    let q = kernels_exact(spec)?;
    let mut worst = 0.0f64;
    for (kf, kq) in f.iter().zip(&q) {
        for (rf, rq) in kf.rows.iter().zip(&kq.rows) {
            for (ef, eq) in rf.iter().zip(rq) {
                let exact = ratio_f64(
                    &eq.prob.numer().to_biguint().unwrap_or_default(),
                    &eq.prob.denom().to_biguint().unwrap_or_default(),
                );
                worst = worst.max(((ef.prob - exact) / exact).abs());
            }
        }
    }
    Ok(worst)
}
