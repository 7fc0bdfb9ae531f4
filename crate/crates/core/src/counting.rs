//! Exact counting of type-(s, t) permutations through the state chain.
//!
//! The backward recursion `C_n(x) = 1`, `C_i(x) = sum_j C_{i+1}(T_j x)` runs over the
//! moves whose matched right vertex carries a label `<= n`, which is exactly the
//! number of ways to finish a permutation from state `x` at step `i`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::BandSpec;
use crate::scalar::{log_sum_exp, Real};
use crate::states::{StateSpace, StateTuple};

/// Above this length, completions are tracked as scaled floats instead of integers.
pub const EXACT_LIMIT: usize = 4096;

const LN2: f64 = std::f64::consts::LN_2;

/// Natural log of a big integer.
pub fn ln_biguint(a: &BigUint) -> f64 {
    if a.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = a.bits();
    let sh = bits.saturating_sub(900);
    let top = (a >> sh).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + sh as f64 * LN2
}

/// `a / b` rounded to double with ~1 ulp error.
pub fn ratio_f64(a: &BigUint, b: &BigUint) -> f64 {
    let sh = b.bits().max(a.bits()).saturating_sub(1000);
    let (a, b) = (a >> sh, b >> sh);
    a.to_f64().unwrap_or(f64::INFINITY) / b.to_f64().unwrap_or(f64::INFINITY)
}

/// Completion counts `C_i(x)` for every step `0..=n` and state.
#[derive(Clone, Debug)]
pub struct CountTable {
    pub spec: BandSpec,
    pub space: StateSpace,
    /// `completions[i][x]`
    pub completions: Vec<Vec<BigUint>>,
}

impl CountTable {
    pub fn count(&self) -> &BigUint {
        &self.completions[0][self.space.initial()]
    }

    pub fn get(&self, i: usize, x: &StateTuple) -> Option<&BigUint> {
        self.space.index_of(x).map(|k| &self.completions[i][k])
    }
}

fn backward_step(space: &StateSpace, next: &[BigUint], vertex: usize, n: usize) -> Vec<BigUint> {
    (0..space.len())
        .map(|x| {
            let mut acc = BigUint::zero();
            for mv in space.legal_moves(x, vertex, n) {
                acc += &next[mv.next];
            }
            acc
        })
        .collect()
}

/// Exact `|F_{n,s,t}|`.
pub fn count_matchings(spec: BandSpec) -> Result<BigUint> {
    let space = StateSpace::new(spec.s, spec.t)?;
    Ok(count_with(&space, spec.n))
}

pub(crate) fn count_with(space: &StateSpace, n: usize) -> BigUint {
    let mut row = vec![BigUint::one(); space.len()];
    for i in (0..n).rev() {
        row = backward_step(space, &row, i + 1, n);
    }
    row.swap_remove(space.initial())
}

/// Full table of completion counts.
pub fn completion_table(spec: BandSpec) -> Result<CountTable> {
    let space = StateSpace::new(spec.s, spec.t)?;
    let n = spec.n;
    let mut completions = vec![Vec::new(); n + 1];
    completions[n] = vec![BigUint::one(); space.len()];
    for i in (0..n).rev() {
        completions[i] = backward_step(&space, &completions[i + 1], i + 1, n);
    }
    Ok(CountTable { spec, space, completions })
}

/// Completion counts in floating point, each step rescaled so its largest
/// entry is one: `C_i(x) = value[i][x] * exp(log_scale[i])`.
#[derive(Clone, Debug)]
pub struct ScaledCompletions<T> {
    pub value: Vec<Vec<T>>,
    pub log_scale: Vec<f64>,
}

impl<T: Real> ScaledCompletions<T> {
    pub fn new(space: &StateSpace, n: usize) -> Self {
        let m = space.len();
        let mut value = vec![Vec::new(); n + 1];
        let mut log_scale = vec![0.0; n + 1];
        value[n] = vec![T::one(); m];
        for i in (0..n).rev() {
            let mut row: Vec<T> = (0..m)
                .map(|x| {
                    space.legal_moves(x, i + 1, n).fold(T::zero(), |a, mv| a + value[i + 1][mv.next])
                })
                .collect();
            let max = row.iter().copied().fold(T::zero(), T::max);
            for v in row.iter_mut() {
                *v /= max;
            }
            log_scale[i] = log_scale[i + 1] + max.as_f64().ln();
            value[i] = row;
        }
        ScaledCompletions { value, log_scale }
    }

    pub fn ln(&self, i: usize, x: usize) -> f64 {
        self.value[i][x].as_f64().ln() + self.log_scale[i]
    }
}

/// `log |F_{n,s,t}|` for any `n`; exact integers up to [`EXACT_LIMIT`].
pub fn log_count(spec: BandSpec) -> Result<f64> {
    let space = StateSpace::new(spec.s, spec.t)?;
    if spec.n <= EXACT_LIMIT {
        return Ok(ln_biguint(&count_with(&space, spec.n)));
    }
    let sc = ScaledCompletions::<f64>::new(&space, spec.n);
    Ok(sc.ln(0, space.initial()))
}

/// Number of directed paths of length `len` from every state in `H_{s,t}` (no endgame).
pub fn path_count_vector(space: &StateSpace, len: usize) -> Vec<BigUint> {
    let mut v = vec![BigUint::one(); space.len()];
    for _ in 0..len {
        v = (0..space.len())
            .map(|x| space.moves(x).iter().fold(BigUint::zero(), |a, mv| a + &v[mv.next]))
            .collect();
    }
    v
}

/// `P_L(x)`: number of length-`len` directed paths in `H_{s,t}` starting at `x`.
pub fn path_counts(s: usize, t: usize, len: usize, from: &StateTuple) -> Result<BigUint> {
    let space = StateSpace::new(s, t)?;
    let x = space
        .index_of(from)
        .ok_or_else(|| Error::InvalidArgument(format!("{from} is not a state of X_{{{s},{t}}}")))?;
    Ok(path_count_vector(&space, len).swap_remove(x))
}

/// Dominant eigenpair of the `H_{s,t}` adjacency matrix (right eigenvector).
#[derive(Clone, Debug, Serialize)]
pub struct SpectralData<T> {
    pub lambda: T,
    /// Positive, unit 1-norm.
    pub v: Vec<T>,
    /// `max |(A v - lambda v)_x|`
    pub residual: T,
    /// Estimated modulus of the subdominant eigenvalue.
    pub lambda2_abs: T,
    pub iterations: usize,
}

impl<T: Real> SpectralData<T> {
    pub fn gap(&self) -> T {
        self.lambda - self.lambda2_abs
    }
}

const POWER_TOL: f64 = 1e-13;
const POWER_CAP: usize = 1_000_000;

fn apply<T: Real>(space: &StateSpace, v: &[T]) -> Vec<T> {
    (0..space.len()).map(|x| space.moves(x).iter().fold(T::zero(), |a, mv| a + v[mv.next])).collect()
}

fn apply_transpose<T: Real>(space: &StateSpace, u: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); space.len()];
    for (x, &ux) in u.iter().enumerate() {
        for mv in space.moves(x) {
            out[mv.next] += ux;
        }
    }
    out
}

fn power<T: Real>(
    space: &StateSpace,
    op: impl Fn(&[T]) -> Vec<T>,
) -> Result<(T, Vec<T>, usize)> {
    let m = space.len();
    let inv = T::one() / T::from_count(m);
    let mut v = vec![inv; m];
    let tol = T::lift(POWER_TOL);
    for it in 1..=POWER_CAP {
        let w = op(&v);
        let norm: T = w.iter().copied().sum();
        let w: Vec<T> = w.into_iter().map(|a| a / norm).collect();
        let delta = v.iter().zip(&w).map(|(&a, &b)| (a - b).magnitude()).fold(T::zero(), T::max);
        v = w;
        if delta < tol {
            // One more application for the eigenvalue at the converged vector.
            let w = op(&v);
            let lambda: T = w.iter().copied().sum();
            return Ok((lambda, v, it));
        }
    }
    Err(Error::NonConvergence("power iteration"))
}

/// Perron data of `H_{s,t}` by power iteration.
pub fn perron(s: usize, t: usize) -> Result<SpectralData<f64>> {
    perron_with::<f64>(s, t)
}

pub fn perron_with<T: Real>(s: usize, t: usize) -> Result<SpectralData<T>> {
    let space = StateSpace::new(s, t)?;
    perron_for(&space)
}

pub(crate) fn perron_for<T: Real>(space: &StateSpace) -> Result<SpectralData<T>> {
    let (lambda, v, iterations) = power(space, |x: &[T]| apply(space, x))?;
    let av = apply(space, &v);
    let residual =
        av.iter().zip(&v).map(|(&a, &b)| (a - lambda * b).magnitude()).fold(T::zero(), T::max);
    let lambda2_abs = subdominant(space, lambda, &v)?;
    Ok(SpectralData { lambda, v, residual, lambda2_abs, iterations })
}

/// Modulus of the second eigenvalue from iterating `A` on the complement of the
/// Perron direction (oblique projection with the left eigenvector).
fn subdominant<T: Real>(space: &StateSpace, lambda: T, v: &[T]) -> Result<T> {
    let m = space.len();
    if m == 1 {
        return Ok(T::zero());
    }
    let (_, u, _) = power(space, |x: &[T]| apply_transpose(space, x))?;
    let uv: T = u.iter().zip(v).map(|(&a, &b)| a * b).sum();
    let project = |w: &mut Vec<T>| {
        let c: T = u.iter().zip(w.iter()).map(|(&a, &b)| a * b).sum::<T>() / uv;
        for (wx, &vx) in w.iter_mut().zip(v) {
            *wx -= c * vx;
        }
    };
    // Deterministic start with no special symmetry.
    let mut w: Vec<T> = (0..m).map(|k| T::lift(((k * 7919 + 13) % 101) as f64 / 101.0 - 0.5)).collect();
    project(&mut w);
    let norm = |w: &[T]| w.iter().map(|&a| a * a).sum::<T>().sqrt();
    let n0 = norm(&w);
    if n0 == T::zero() {
        return Ok(T::zero());
    }
    for a in w.iter_mut() {
        *a /= n0;
    }
    let burn = 200;
    let steps = 400;
    let mut log_growth = 0.0;
    for k in 0..burn + steps {
        let mut next = apply(space, &w);
        project(&mut next);
        let nn = norm(&next);
        if nn == T::zero() || !nn.is_finite() {
            return Ok(T::zero());
        }
        if k >= burn {
            log_growth += nn.as_f64().ln();
        }
        w = next.into_iter().map(|a| a / nn).collect();
    }
    let est = (log_growth / steps as f64).exp();
    Ok(T::lift(est).min(lambda))
}

/// How each free step is weighted in [`weighted_count`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    /// `(t + 1)^m` on every step out of a non-forced state.
    Nominal,
    /// `(#legal moves)^m` on every step: the reciprocal probability of the
    /// sequential sampler raised to `m`.
    Sampler,
}

/// `log [x_0]^n_m = log sum_paths (t+1)^{m (n - theta)}` over permutation paths.
pub fn weighted_count(spec: BandSpec, m: f64) -> Result<f64> {
    weighted_count_with(spec, m, Weighting::Nominal)
}

pub fn weighted_count_with(spec: BandSpec, m: f64, weighting: Weighting) -> Result<f64> {
    if m.is_nan() || m.abs() > 4.0 {
        return Err(Error::InvalidArgument(format!("|m| must be at most 4, got {m}")));
    }
    let space = StateSpace::new(spec.s, spec.t)?;
    let n = spec.n;
    let free_w = m * ((spec.t + 1) as f64).ln();
    let mut row = vec![0.0f64; space.len()];
    let mut terms = Vec::with_capacity(spec.t + 1);
    for i in (0..n).rev() {
        row = (0..space.len())
            .map(|x| {
                terms.clear();
                let legal: Vec<_> = space.legal_moves(x, i + 1, n).collect();
                let w = match weighting {
                    Weighting::Nominal if !space.is_forced(x) => free_w,
                    Weighting::Nominal => 0.0,
                    Weighting::Sampler => m * (legal.len() as f64).ln(),
                };
                terms.extend(legal.iter().map(|mv| w + row[mv.next]));
                log_sum_exp(&terms)
            })
            .collect();
    }
    Ok(row[space.initial()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{band_graph, enumerate_matchings, permanent_ryser};
    use crate::states::encode_permutation;

    fn spec(s: usize, t: usize, n: usize) -> BandSpec {
        BandSpec::new(s, t, n).unwrap()
    }

    #[test]
    fn fibonacci_counts() {
        let got: Vec<u64> =
            (1..=5).map(|n| count_matchings(spec(1, 1, n)).unwrap().to_u64().unwrap()).collect();
        assert_eq!(got, vec![1, 2, 3, 5, 8]);
        assert_eq!(count_matchings(spec(1, 1, 10)).unwrap(), BigUint::from(89u32));
    }

    #[test]
    fn single_vertex_has_one_matching() {
        for s in 1..4 {
            for t in 1..4 {
                assert_eq!(count_matchings(spec(s, t, 1)).unwrap(), BigUint::one());
            }
        }
    }

    #[test]
    fn agrees_with_ryser_on_small_bands() {
        for s in 1..=3 {
            for t in 1..=3 {
                for n in 1..=9 {
                    let sp = spec(s, t, n);
                    assert_eq!(
                        count_matchings(sp).unwrap(),
                        permanent_ryser(&band_graph(sp)).unwrap(),
                        "{sp}"
                    );
                }
            }
        }
    }

    #[test]
    fn completion_table_consistency() {
        let sp = spec(1, 1, 12);
        let tab = completion_table(sp).unwrap();
        let zero = StateTuple::new(&[0]);
        for i in 0..12 {
            let tail = count_matchings(spec(1, 1, 12 - i)).unwrap();
            assert_eq!(tab.get(i, &zero).unwrap(), &tail, "i={i}");
        }
        let sp = spec(2, 2, 9);
        let tab = completion_table(sp).unwrap();
        assert_eq!(tab.count(), &count_matchings(sp).unwrap());
        // Last step: exactly one legal move out of every reachable state.
        for perm in enumerate_matchings(&band_graph(sp)).unwrap() {
            let path = encode_permutation(&perm, sp).unwrap();
            assert!(tab.get(8, &path.states[8]).unwrap().is_one());
        }
        // Partition of continuations by the first move.
        for i in 0..9 {
            for x in 0..tab.space.len() {
                let sum = tab
                    .space
                    .legal_moves(x, i + 1, 9)
                    .fold(BigUint::zero(), |a, m| a + &tab.completions[i + 1][m.next]);
                assert_eq!(sum, tab.completions[i][x]);
            }
        }
    }

    #[test]
    fn completions_of_reachable_states_are_positive() {
        let sp = spec(2, 3, 10);
        let tab = completion_table(sp).unwrap();
        for perm in enumerate_matchings(&band_graph(sp)).unwrap() {
            let path = encode_permutation(&perm, sp).unwrap();
            for (i, x) in path.states.iter().enumerate() {
                assert!(!tab.get(i, x).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn scaled_completions_match_exact() {
        let sp = spec(3, 2, 600);
        let space = StateSpace::new(3, 2).unwrap();
        let exact = ln_biguint(&count_matchings(sp).unwrap());
        let sc = ScaledCompletions::<f64>::new(&space, 600);
        assert!((sc.ln(0, space.initial()) - exact).abs() < 1e-10 * exact);
        let sc32 = ScaledCompletions::<f32>::new(&space, 600);
        assert!((sc32.ln(0, space.initial()) - exact).abs() < 1e-3 * exact);
    }

    #[test]
    fn log_count_beyond_exact_limit_is_continuous() {
        let a = log_count(spec(2, 1, EXACT_LIMIT)).unwrap();
        let b = log_count(spec(2, 1, EXACT_LIMIT + 1)).unwrap();
        let lambda = perron(2, 1).unwrap().lambda;
        assert!((b - a - lambda.ln()).abs() < 1e-6);
    }

    #[test]
    fn path_counts_follow_fibonacci() {
        let zero = StateTuple::new(&[0]);
        let p: Vec<u64> =
            (0..10).map(|l| path_counts(1, 1, l, &zero).unwrap().to_u64().unwrap()).collect();
        assert_eq!(p[0], 1);
        for l in 2..10 {
            assert_eq!(p[l], p[l - 1] + p[l - 2]);
        }
        let space = StateSpace::new(2, 2).unwrap();
        assert!(path_count_vector(&space, 0).iter().all(|c| c.is_one()));
    }

    #[test]
    fn perron_values() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let p = perron(1, 1).unwrap();
        assert!((p.lambda - phi).abs() < 1e-10);
        assert!(p.residual < 1e-12);
        let p = perron(2, 1).unwrap();
        assert!((p.lambda - 1.8392867552).abs() < 1e-10);
        assert!(p.gap() > 0.0);
        let p = perron(3, 2).unwrap();
        assert!(p.v.iter().all(|&v| v > 0.0));
        assert!((p.v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // (1,1): the other eigenvalue is -1/phi.
        let p = perron(1, 1).unwrap();
        assert!((p.lambda2_abs - 1.0 / phi).abs() < 1e-6);
    }

    #[test]
    fn path_count_ratios_approach_perron_vector() {
        let space = StateSpace::new(2, 2).unwrap();
        let p = perron(2, 2).unwrap();
        let ratios = |l: usize| {
            let v = path_count_vector(&space, l);
            (0..space.len()).map(|x| ratio_f64(&v[x], &v[0])).collect::<Vec<_>>()
        };
        let (r200, r400) = (ratios(200), ratios(400));
        for x in 0..space.len() {
            assert!((r200[x] - r400[x]).abs() < 1e-10);
            assert!((r400[x] - p.v[x] / p.v[0]).abs() < 1e-9);
        }
        let v300 = path_count_vector(&space, 300);
        let v301 = path_count_vector(&space, 301);
        assert!((ratio_f64(&v301[3], &v300[3]) - p.lambda).abs() < 1e-10);
    }

    #[test]
    fn weighted_count_special_cases() {
        let sp = spec(2, 1, 50);
        let w0 = weighted_count(sp, 0.0).unwrap();
        assert!((w0 - ln_biguint(&count_matchings(sp).unwrap())).abs() < 1e-9);

        let sp = spec(1, 1, 8);
        let brute: f64 = enumerate_matchings(&band_graph(sp))
            .unwrap()
            .iter()
            .map(|p| {
                let theta = encode_permutation(p, sp).unwrap().theta(1);
                2f64.powi((8 - theta) as i32)
            })
            .sum();
        assert!((weighted_count(sp, 1.0).unwrap() - brute.ln()).abs() < 1e-12);
        assert!(weighted_count(sp, 4.5).is_err());
    }
}
