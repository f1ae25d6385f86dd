use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors from table construction and the statistical operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("binomial coefficient undefined: k = {k} exceeds n = {n}")]
    BinomialDomain { n: u64, k: u64 },

    #[error("table must have at least one row and one column")]
    EmptyTable,

    #[error("{rows}x{cols} table needs {expected} cells, got {got}")]
    CellCountMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },

    #[error("table sample size must be at least 1")]
    ZeroSampleSize,

    #[error("relative frequencies must be nonnegative and sum to 1 (sum = {sum})")]
    InvalidRelTable { sum: f64 },

    #[error("invalid probability distribution: {reason}")]
    InvalidDistribution { reason: String },

    #[error("probability {value} outside (0, 1]")]
    InvalidProbability { value: f64 },

    #[error("invalid margin specification: {reason}")]
    InvalidMarginSpec { reason: String },

    #[error("chi-square test requires all margins positive (zero {axis} margin at index {index})")]
    ZeroMargin { axis: &'static str, index: usize },

    #[error("Monte Carlo estimation needs at least one sample")]
    NoMonteCarloSamples,

    #[error("odds ratio {odds_ratio} must exceed 1 for the tail bound")]
    OddsRatioAtMostOne { odds_ratio: f64 },

    #[error("study set must contain at least one study")]
    EmptyStudySet,

    #[error("study {index} has shape {got_rows}x{got_cols}, expected {rows}x{cols}")]
    StudyShapeMismatch {
        index: usize,
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },

    #[error("p-value list and sample-size list differ in length ({p_len} vs {n_len})")]
    ListLengthMismatch { p_len: usize, n_len: usize },

    #[error("weighted pooling needs a nonempty list of (N, MI) pairs")]
    EmptyPoolInput,

    #[error("invalid experiment configuration: {reason}")]
    InvalidExperiment { reason: String },

    #[error("table generator rejected {attempts} consecutive draws (all had a zero margin)")]
    DegenerateGenerator { attempts: u32 },

    #[error("regression needs at least two points with non-constant x values")]
    DegenerateRegression,
}

/// Errors from parsing the headerless CSV contingency-table format.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableParseError {
    #[error("empty input: expected at least one row of counts")]
    Empty,

    #[error("line {line}: expected {expected} columns, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}, column {col}: negative value")]
    Negative { line: usize, col: usize },

    #[error("line {line}, column {col}: invalid integer {token:?}")]
    InvalidInteger {
        line: usize,
        col: usize,
        token: String,
    },

    #[error("table sums to zero: at least one count must be positive")]
    AllZero,
}
