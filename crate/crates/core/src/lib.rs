//! Counting and estimating perfect matchings of band bipartite graphs.
//!
//! A type-(s, t) graph joins left vertex `i` to right vertex `j'` whenever
//! `-s <= j - i <= t`. Its perfect matchings are the permutations with the same
//! displacement bound, and they are in bijection with length-`n` paths of a
//! finite state chain. The crate exposes that chain exactly (big-integer counts,
//! transition kernels, moments of the forced-move count), the sequential
//! importance samplers built on it, optimal sampling probabilities for `t = 1`,
//! and diagnostics for sample-size analysis.
//!
//! Numeric routines are generic over [`Scalar`] / [`Real`]; the aliases below fix
//! the common `f64` instantiations.

pub mod analysis;
pub mod chain;
pub mod counting;
pub mod error;
pub mod graph;
pub mod optprob;
pub mod sampler;
pub mod scalar;
pub mod states;

pub use analysis::{
    clt_check, crossover_n_star, mcmc_reference, naive_variance_comparison, table1, table2,
    CltReport, CrossoverReport, SampleSizeRow, SampleSizeTable, Table1Row,
};
pub use chain::{
    coupling_time_test, exact_theta_moments, extract_constants, kernels, kernels_exact,
    max_correlation, sample_uniform, CorrelationReport, CouplingReport, MomentReport,
    TransitionKernel, UniformSampler,
};
pub use counting::{
    completion_table, count_matchings, log_count, path_counts, perron, weighted_count,
    CountTable, SpectralData,
};
pub use error::{Error, Result};
pub use graph::{
    band_graph, enumerate_matchings, has_perfect_matching, permanent_ryser, BandSpec,
    BipartiteGraph,
};
pub use optprob::{
    conjecture_experiment, convergence_rate_check, limiting_kernel, limiting_prob,
    solve_opt_probs, verify_bounded_ratio, LimitingKernel, OptProbs,
};
pub use sampler::{
    estimate_count, required_samples, sis_limiting, sis_sequence, sis_uniform,
    sis_weighted_t1, ISEstimate, SamplerKind, Source, WeightedSample,
};
pub use scalar::{DoubleDouble, Real, Scalar};
pub use states::{
    decode_sequence, encode_permutation, enumerate_states, state_graph, transition,
    SequencePath, StateGraph, StateSpace, StateTuple,
};

/// Transition kernel with double-precision entries.
pub type Kernel = TransitionKernel<f64>;
/// Transition kernel with exact rational entries.
pub type ExactKernel = TransitionKernel<num_rational::BigRational>;
/// Perron data in double precision.
pub type Spectral = SpectralData<f64>;
/// Optimal `t = 1` probabilities in double precision.
pub type OptProbs64 = OptProbs<f64>;
/// Optimal `t = 1` probabilities in double-double precision.
pub type OptProbsDD = OptProbs<DoubleDouble>;
/// Limiting kernel in double precision.
pub type Limiting = LimitingKernel<f64>;
