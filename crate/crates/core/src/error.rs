use thiserror::Error;

/// Errors raised anywhere in the linkage pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unparsable date `{value}` at row {row}")]
    UnparsableDate { row: usize, value: String },
    #[error("duplicate date {date} at row {row}")]
    DuplicateDate { row: usize, date: String },
    #[error("non-positive price {value} at row {row}, column `{column}`")]
    NonPositivePrice { row: usize, column: String, value: f64 },
    #[error("unparsable number `{value}` at row {row}, column `{column}`")]
    UnparsableNumber { row: usize, column: String, value: String },
    #[error("no common dates across the supplied panels")]
    EmptyIntersection,
    #[error("panel kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },
    #[error("split of {rows} rows at fraction {fraction} leaves an empty side")]
    DegenerateSplit { rows: usize, fraction: f64 },
    #[error("window of lookback {lookback} + horizon {horizon} exceeds {rows} rows")]
    WindowTooLarge {
        lookback: usize,
        horizon: usize,
        rows: usize,
    },
    #[error("invalid panel: {0}")]
    InvalidPanel(String),
    #[error("too few observations: need {needed}, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("non-finite value at index {0}")]
    NonFiniteValue(usize),
    #[error("degenerate (zero) variance")]
    DegenerateVariance,
    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("singular regression")]
    SingularRegression,
    #[error("design matrix is rank deficient (column {0})")]
    RankDeficient(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("residuals are identically zero")]
    ZeroResiduals,
    #[error("Cholesky factorization failed: matrix is not positive definite")]
    CholeskyFailure,
    #[error("objective is not finite at the starting point")]
    NonFiniteObjective,
    #[error("starting point violates the parameter bounds")]
    InfeasibleStart,
    #[error("variance recursion left the finite range at t = {0}")]
    NonFiniteRecursion(usize),
    #[error("optimization failed: {0}")]
    OptimizationFailed(String),
    #[error("correlation matrix is singular at t = {0}")]
    SingularCorrelation(usize),
    #[error("unknown series `{0}`")]
    UnknownSeries(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training loss diverged at epoch {0}")]
    DivergedLoss(usize),
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("infeasible simulation spec: {0}")]
    InfeasibleSpec(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
