use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("beta_bar[{index}] is zero; the model is ill-posed")]
    ZeroIdiosyncraticLoading { index: usize },

    #[error("truncation level K = {k} is smaller than the factor count m = {m}")]
    TruncationBelowFactors { k: usize, m: usize },

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("noise vector has {got} coordinates, need at least {need}")]
    NoiseTooShort { got: usize, need: usize },

    #[error("portfolio violates the budget constraint: sum of holdings is {sum}")]
    BudgetViolation { sum: f64 },

    #[error("portfolio has {got} entries but the market supports at most {max}")]
    PortfolioTooLong { got: usize, max: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("joint support has {size} scenarios, exceeding the enumeration cap {cap}; use Monte Carlo")]
    EnumerationCapExceeded { size: u128, cap: usize },

    #[error("family `{family}` does not support {what}")]
    Unsupported { family: &'static str, what: &'static str },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid utility: {0}")]
    InvalidUtility(String),

    #[error("invalid growth bounds: {0}")]
    InvalidGrowthBounds(String),

    #[error("utility carries no growth certificate")]
    Uncertified,

    #[error("invalid solver configuration: {0}")]
    InvalidSolverConfig(String),

    #[error("no interior maximizer guaranteed: X must charge both signs (P(X>0) = {p_pos}, P(X<0) = {p_neg})")]
    OneSided { p_pos: f64, p_neg: f64 },

    #[error("no-arbitrage fails at coordinates {coordinates:?}")]
    Arbitrage { coordinates: Vec<usize> },

    #[error("tilt equation has no root in [-{bracket}, {bracket}] (g = {g_lo} .. {g_hi})")]
    NoTiltBracket { bracket: f64, g_lo: f64, g_hi: f64 },

    #[error("scenario set has {got} coordinates, need {need}")]
    ScenarioWidth { got: usize, need: usize },

    #[error("{0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
