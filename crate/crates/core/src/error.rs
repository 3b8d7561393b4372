use thiserror::Error;

use crate::dsl::DslError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid probability space: {0}")]
    InvalidSpace(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("distributions have different supports")]
    SupportMismatch,
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("map undefined on atom `{0}`")]
    UndefinedMap(String),
    #[error("malformed grouping: {0}")]
    InvalidGrouping(String),
    #[error("refinement factor must be positive")]
    ZeroRefinement,
    #[error("set is not a subset of the codomain")]
    NotSubset,
    #[error("domain has no sigma partition")]
    MissingPartition,
    #[error("domain has no metric")]
    MissingMetric,
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("delta must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("correspondences have different domains or codomains")]
    DomainMismatch,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("correspondence is not measurable with respect to the sigma partition")]
    NotMeasurable,
    #[error("correspondence has an empty value at `{0}`")]
    EmptyValue(String),
    #[error("operation requires an exhaustive distribution set")]
    SampledSet,
    #[error("target lies {distance} (tv) outside the convex hull")]
    TargetOutsideHull { distance: f64 },
    #[error("missing dominating correspondence")]
    MissingDominating,
    #[error("dominating correspondence does not contain F at parameter {param}, point {point}")]
    NotDominated { param: usize, point: usize },
    #[error("payoff table: {0}")]
    Payoff(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("linear program failed: {0}")]
    Lp(String),
    #[error(transparent)]
    Dsl(#[from] DslError),
}
