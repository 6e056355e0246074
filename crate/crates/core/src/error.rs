use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
///
/// Tri-valued outcomes (an `Undecided` Osgood verdict, an `Inconclusive`
/// diagnostic) are results, not errors; they never show up here.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation failed at {at}: {reason}")]
    Evaluation { at: f64, reason: String },

    #[error("quadrature on [{a}, {b}] did not reach tolerance (estimated error {err:e})")]
    QuadratureNonConvergence { a: f64, b: f64, err: f64 },

    #[error("the Osgood integral diverges, so the blow-up functional F_B does not exist")]
    OsgoodInfinite,

    #[error("improper integral tail undecided after {panels} panels")]
    UndecidedTail { panels: usize },

    #[error("target {target} is outside the range of F_U (supremum {sup})")]
    TargetOutOfRange { target: f64, sup: f64 },

    #[error("only {found} crossing times recorded, {needed} needed")]
    InsufficientCrossings { found: usize, needed: usize },

    #[error("sequence acceleration diverged (increments grow)")]
    DivergentAcceleration,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("unknown catalog id `{0}`")]
    UnknownId(String),
}

pub type Result<T> = std::result::Result<T, Error>;
