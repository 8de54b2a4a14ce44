use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("invalid ring parameter: {0}")]
    InvalidParameter(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("non-invertible, valuation {}", fmt_val(*.valuation))]
    NonInvertible { valuation: Option<u32> },
    #[error("malformed scalar: {0}")]
    MalformedScalar(String),
    #[error("context mismatch: {0}")]
    ContextMismatch(String),
    #[error("malformed display: {0}")]
    MalformedDisplay(String),
    #[error("V not computable at this precision ({0})")]
    VNotComputable(String),
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("slopes unstable under precision doubling: {at_n} at N vs {at_2n} at 2N")]
    PrecisionUnstable { at_n: String, at_2n: String },
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("invalid deformation point: {0}")]
    InvalidPoint(String),
    #[error("no cycle through {0}")]
    NoCycle(String),
    #[error("budget exceeded: {needed} points requested, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("module expression: {0}")]
    Parse(String),
    #[error("json: {0}")]
    Json(String),
}

impl Error {
    /// True for failures caused by finite p-adic precision rather than bad input.
    pub fn is_precision(&self) -> bool {
        matches!(
            self,
            Error::InsufficientPrecision(_) | Error::PrecisionUnstable { .. } | Error::VNotComputable(_)
        )
    }
}

fn fmt_val(v: Option<u32>) -> String {
    match v {
        Some(v) => v.to_string(),
        None => "infinite at working precision".to_string(),
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
