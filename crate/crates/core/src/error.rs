use thiserror::Error;

/// Errors raised across the crate.
///
/// Model-validation variants carry enough context (state or row index) to
/// point at the offending entry of a configuration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("law has a point mass and is not absolutely continuous")]
    PointMass,
    #[error("sojourn law has infinite mean")]
    InfiniteMean,
    #[error("stable index {0} unsupported (need 1 < alpha <= 2)")]
    UnsupportedAlpha(f64),

    #[error("need at least two states, got {0}")]
    TooFewStates(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
    #[error("row {row} of the transition matrix sums to {sum}")]
    RowSumError { row: usize, sum: f64 },
    #[error("negative or non-finite transition probability at ({row}, {col})")]
    InvalidProbability { row: usize, col: usize },
    #[error("state {state} has a self transition")]
    SelfLoopError { state: usize },
    #[error("embedded chain is not irreducible (state {unreachable} unreachable from state 0 or vice versa)")]
    NotIrreducible { unreachable: usize },
    #[error("transition ({from}, {to}) has positive probability but no sojourn law")]
    MissingSojournLaw { from: usize, to: usize },
    #[error("initial distribution is not a probability vector")]
    InvalidInitial,
    #[error("state {0} out of range")]
    UnknownState(usize),

    #[error("state {state} is never hit before the horizon")]
    NeverHits { state: usize },
    #[error("time {0} outside the range covered by the trajectory")]
    OutOfRange(f64),
    #[error("cycle integral variance looks infinite")]
    InfiniteVarianceSuspected,

    #[error("backward series did not contract within {terms} terms")]
    NonConvergent { terms: usize },
    #[error("moment of order {order} diverges (E[A^k] >= 1)")]
    MomentDiverges { order: usize },
    #[error("no sign change of log E[A^nu] on the bracket")]
    NoSignChange,

    #[error("regime requires E_pi[a] > 0, got {0}")]
    NotStable(f64),
    #[error("regime requires E_pi[a] < 0, got {0}")]
    NotDivergent(f64),
    #[error("regime requires E_pi[a] = 0, got {0}")]
    NotCritical(f64),
    #[error("coefficient a(.) is not constant across states")]
    NotConstantA,
    #[error("b(.) is identically zero")]
    ZeroB,
    #[error("no regularly varying transition with index in (1, 2)")]
    EmptyHeavySet,

    #[error("b({state}) must be positive")]
    NonPositiveB { state: usize },
    #[error("b({state}) must be non-negative")]
    NegativeB { state: usize },
    #[error("value {0} outside the range of the transform")]
    DomainError(f64),
    #[error("case tag inconsistent with the model: {0}")]
    CaseMismatch(&'static str),

    #[error("sample too small: {got} < {need}")]
    TooSmall { got: usize, need: usize },
    #[error("sample contains non-positive values")]
    NonPositive,
    #[error("sample contains NaN")]
    NonFinite,
    #[error("sample has zero interquartile range")]
    DegenerateSample,
    #[error("order-statistic count {k} invalid for sample size {n}")]
    InvalidK { k: usize, n: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
