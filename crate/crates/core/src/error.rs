use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("variable sets overlap: {0:?}")]
    Overlap(Vec<usize>),
    #[error("{what} has size {size}, above the cap {cap}")]
    SizeCap { what: &'static str, size: usize, cap: usize },
    #[error("zero marginal probability at {side} state {index}")]
    ZeroMarginal { side: &'static str, index: usize },
    #[error("chain is not ergodic: {0}")]
    NonErgodic(String),
    #[error("vectors {0} and {1} are collinear")]
    Collinear(usize, usize),
    #[error("kernel window is incomplete and no tail model was given")]
    MissingTail,
    #[error("tail model is not summable: {0}")]
    NonSummableTail(String),
    #[error("no spacing up to {cap} gives class sums below 1")]
    NoValidSpacing { cap: usize },
    #[error("grid resolution {m} is below the minimum {min}")]
    GridTooCoarse { m: usize, min: usize },
    #[error("boundary value {value:e} at {side} exceeds tolerance")]
    Boundary { side: &'static str, value: f64 },
    #[error("event factor {factor} is not below 1")]
    FactorTooLarge { factor: f64 },
    #[error("decorrelation entry ({0}, {1}) equals 1")]
    UnitEntry(usize, usize),
    #[error("l1 norm {norm} is not below 1")]
    NormTooLarge { norm: f64 },
    #[error("ODE integration failed: {0}")]
    Integrator(String),
    #[error("block distributions differ: {0}")]
    DistributionMismatch(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}
