use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty membership vector")]
    EmptyPartition,
    #[error("invalid membership: {0}")]
    InvalidMembership(String),
    #[error("invalid size bounds: min {min}, max {max}")]
    InvalidBounds { min: usize, max: usize },
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("unknown dyadic covariate `{0}`")]
    UnknownCovariate(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("enumeration of {n} actors exceeds the cap of {cap}")]
    EnumerationCap { n: usize, cap: usize },
    #[error("no partition of {n} actors respects the size bounds")]
    EmptySupport { n: usize },
    #[error("statistic `{0}` is not a function of block sizes")]
    NotSizeBased(String),
    #[error("maximum likelihood estimate is at infinity: {0}")]
    MleAtInfinity(String),
    #[error("Newton-Raphson did not converge after {0} iterations")]
    NewtonNoConvergence(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("restricted support unreachable from the initial partition")]
    Unreachable,
    #[error("collinear or degenerate statistic: {0}")]
    DegenerateStatistic(String),
    #[error("parameter divergence (|alpha| > {bound}); the model looks degenerate, consider respecifying statistics: {detail}")]
    Divergence { bound: f64, detail: String },
    #[error("bridge distributions do not overlap (effective sample size {ess:.1} at bridge {bridge}); increase the number of bridges")]
    BridgeOverlap { bridge: usize, ess: f64 },
    #[error("singular matrix")]
    Singular,
}

pub type Result<T> = std::result::Result<T, Error>;
