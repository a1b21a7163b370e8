use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoreError {
    #[error("base {0} is invalid: bases must be at least 2")]
    InvalidBase(u64),
    #[error("symbol {symbol} is outside the alphabet [0, {alphabet})")]
    SymbolOutOfRange { symbol: u32, alphabet: u32 },
    #[error("periodic tail must be a nonempty word")]
    EmptyPeriod,
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(String),
    #[error("probabilities sum to {0}, expected exactly 1")]
    ProbabilitySum(String),
    #[error("invalid carpet: {0}")]
    InvalidCarpet(String),
    #[error("empty fiber at row {0}")]
    EmptyFiber(u32),
    #[error("line must be non-principal (slope neither 0 nor infinite)")]
    PrincipalLine,
    #[error("affine map is not invertible")]
    NonInvertible,
    #[error("comparison undecided at {bits} bits: {what}")]
    PrecisionExhausted { bits: u32, what: String },
    #[error("node budget of {budget} visits exhausted; partial certified lower count {partial_lower}")]
    BudgetExhausted { budget: u64, partial_lower: u64 },
    #[error("integer range exceeded: {0}")]
    Overflow(String),
    #[error("need digit depth {need}, only {have} available")]
    InsufficientDepth { need: usize, have: usize },
    #[error("cylinder has zero mass")]
    ZeroMass,
    #[error("row {row} has zero probability at digit position {position}")]
    ZeroProbabilityRow { row: u32, position: usize },
    #[error("depth window too deep for {samples} samples: {cells} cells at depth {depth}")]
    WindowTooDeep { samples: u64, cells: u128, depth: u32 },
    #[error("estimate undefined: {0}")]
    UndefinedEstimate(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = CoreError> = core::result::Result<T, E>;
