use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("kernel `{kernel}` requires dimension {required}, got {got}")]
    KernelDimension {
        kernel: String,
        required: usize,
        got: usize,
    },

    #[error("non-finite coordinate at point {point}, component {component}")]
    NonFiniteInput { point: usize, component: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("sample too small: need at least {needed} points, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("zero median distance (all points identical); bandwidth would be invalid")]
    ZeroMedianDistance,

    #[error("bandwidth must be resolved before evaluation (`median` is a sentinel)")]
    UnresolvedBandwidth,

    #[error("invalid kernel spec `{0}`: {1}")]
    InvalidKernelSpec(String, String),

    #[error("invalid generator spec `{0}`: {1}")]
    InvalidGeneratorSpec(String, String),

    #[error("regularization constants must be non-negative, got kappa_p={0}, kappa_q={1}")]
    NegativeKappa(f64, f64),

    #[error("significance level must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("invalid test configuration: {0}")]
    InvalidConfig(String),

    #[error("nonpositive norm estimate {0}; entropy estimate undefined")]
    NonPositiveNorm(f64),

    #[error("degenerate null variance ({0:.3e}); use permutation mode")]
    DegenerateVariance(f64),

    #[error("regularized system is ill-conditioned (gamma too small)")]
    IllConditioned,

    #[error("the KS test is univariate; got dimension {0}")]
    KsDimension(usize),

    #[error("pair table requires equal sample sizes, got {0} and {1}")]
    UnequalSamples(usize, usize),

    #[error("comparison plan invalid: {0}")]
    InvalidPlan(String),

    #[error("rejected label `{0}` has no region assignment")]
    MissingRegion(String),

    #[error("trial {trial} failed: {source}")]
    TrialFailed {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("target power {target} not achieved within n_max={n_max}; trace: {trace:?}")]
    TargetNotAchieved {
        target: f64,
        n_max: usize,
        trace: Vec<(usize, f64)>,
    },

    #[error("csv parse error at row {row}, column {column}: {message}")]
    CsvCell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("ragged csv row {row}: expected {expected} fields, got {got}")]
    RaggedRow {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("label column `{0}` not found")]
    MissingLabelColumn(String),

    #[error("libsvm parse error at line {line}: {message}")]
    Libsvm { line: usize, message: String },

    #[error("empty input file `{0}`")]
    EmptyFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
