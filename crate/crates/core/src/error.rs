use thiserror::Error;

/// Errors raised by the library.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid band specification: {0}")]
    InvalidSpec(String),

    #[error("size limit exceeded: {what} supports n <= {limit}, got {n}")]
    SizeLimit { what: &'static str, limit: usize, n: usize },

    #[error("graph is not square: {left} left vertices, {right} right vertices")]
    NotSquare { left: usize, right: usize },

    #[error("graph file line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("graph has no perfect matching")]
    NoPerfectMatching,

    #[error("illegal transition T_{j} from state {state}")]
    IllegalTransition { state: String, j: usize },

    #[error("permutation violates the band at position {position}: {value}")]
    BandViolation { position: usize, value: usize },

    #[error("not a permutation of 1..={0}")]
    NotAPermutation(usize),

    #[error("sequence is not the image of a permutation: {0}")]
    NotInImage(String),

    #[error("sampler requires t = 1, got t = {0}")]
    WrongT(usize),

    #[error("probability vector has length {got}, expected {expected}")]
    ProbLength { expected: usize, got: usize },

    #[error("{0} did not converge")]
    NonConvergence(&'static str),

    #[error("distribution is constant (zero variance)")]
    ConstantDistribution,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
