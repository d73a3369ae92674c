use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty trace for user `{0}`")]
    EmptyTrace(String),
    #[error("location index {index} out of range (R = {r})")]
    LocationOutOfRange { index: usize, r: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("distribution is not normalized (sum = {0})")]
    NotNormalized(f64),
    #[error("distribution has a negative entry at index {0}")]
    NegativeEntry(usize),
    #[error("matrix row {0} is not stochastic (sum = {1})")]
    NotStochastic(usize, f64),
    #[error("chain is reducible or has no unique stationary distribution")]
    Reducible,
    #[error("stationary solve residual {0} exceeds tolerance")]
    NonConvergence(f64),
    #[error("profile set is empty")]
    NoProfiles,
    #[error("at least two profiles are required, got {0}")]
    TooFewProfiles(usize),
    #[error("invalid permutation")]
    InvalidPermutation,
    #[error("cluster count {k} out of range [1, {r}]")]
    ClusterCountOutOfRange { k: usize, r: usize },
    #[error("empty cluster-count range")]
    EmptyRange,
    #[error("location {0} has no semantic class")]
    UnclassifiedLocation(usize),
    #[error("slot {0} of the semantic seed is empty")]
    EmptySlot(usize),
    #[error("trace length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("alternate trace set is empty but the deniability test is enabled")]
    NoAlternates,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("constant sample: correlation undefined")]
    ConstantSample,
    #[error("empty sample")]
    EmptySample,
    #[error("corpus error: {0}")]
    Corpus(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
