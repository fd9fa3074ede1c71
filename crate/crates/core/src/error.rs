use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("group order at position {index} is {order}; every cyclic factor needs order >= 2")]
    OrderTooSmall { index: usize, order: usize },

    #[error("a group needs at least one cyclic factor")]
    NoFactors,

    #[error("group of size {size} exceeds the configured ceiling {ceiling}")]
    GroupTooLarge { size: u128, ceiling: usize },

    #[error("element has {found} coordinates, group has {expected} factors")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coordinate {position} = {value} is out of range for order {order}")]
    CoordinateOutOfRange {
        position: usize,
        value: usize,
        order: usize,
    },

    #[error("index {index} is out of range for a group of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("operands live in different groups ({left:?} vs {right:?})")]
    GroupMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("requested {requested} elements from a group of size {size}")]
    SizeExceedsGroup { requested: usize, size: usize },

    #[error("operation needs a nonempty set")]
    EmptySet,

    #[error("threshold {0} is outside (0, 1]")]
    ThresholdOutOfRange(f64),

    #[error("character {gamma:?} has zero mean on the row set")]
    ZeroMeanColumn { gamma: Vec<usize> },

    #[error("function has sup-norm {0}, which exceeds 1")]
    SupNormExceeded(f64),

    #[error("vector of length {found} does not match dimension {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("approximation accuracy {0} is outside (0, 1]")]
    EtaOutOfRange(f64),

    #[error("exhaustive search needs {needed} evaluations, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("constrained side has sum of modulus {residual}, expected zero")]
    NotCentred { residual: f64 },

    #[error("witness value {value} is below lambda {lambda}")]
    WitnessBelowLambda { value: f64, lambda: f64 },

    #[error("no quadrant improves the mean; the witness is numerically degenerate")]
    DegenerateExtraction,

    #[error("worst-case extraction guarantee violated: {0}")]
    FaithfulBoundViolated(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("refinement did not finish; no final bounds to report")]
    NotFinished,

    #[error("high-threshold closure needs epsilon > 3/4, got {0}")]
    ClosureThreshold(f64),

    #[error("counterexample parameter n = {0} is outside 1..=10")]
    CounterexampleRange(usize),

    #[error("malformed file at {field}: {message}")]
    Malformed { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
