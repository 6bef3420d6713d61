use thiserror::Error;

use crate::lp::LpStatus;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComponentError {
    #[error("invalid {family} parameters ({p1}, {p2})")]
    InvalidParams {
        family: &'static str,
        p1: f64,
        p2: f64,
    },
    #[error("probability {0} outside (0, 1)")]
    ProbabilityDomain(f64),
    #[error("interval [{lo}, {hi}] touches the density singularity at 0")]
    Singular { lo: f64, hi: f64 },
    #[error("truncation region carries mass {0:e}, too small to sample")]
    DegenerateTruncation(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("model has no positive component")]
    NoPositive,
    #[error("weight {0} is not a positive finite number")]
    BadWeight(f64),
    #[error("components mix Normal and Gamma families")]
    MixedFamilies,
    #[error(transparent)]
    Component(#[from] ComponentError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PairError {
    #[error("components are not pairable: {0}")]
    NotPairable(&'static str),
    #[error("dominating constant {a} is below the minimum {a_star}")]
    BelowDominating { a: f64, a_star: f64 },
    #[error("parameter out of range: {0}")]
    ParameterDomain(String),
    #[error("partition exceeded {cap} cells before reaching the target acceptance")]
    PartitionOverflow { cap: usize },
    #[error(transparent)]
    Component(#[from] ComponentError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PairingError {
    #[error("model has negative components but no acceptable pair")]
    EmptyPairSet,
    #[error("linear program ended with status {0:?}")]
    Lp(LpStatus),
    #[error("delta {0} outside (0, 1)")]
    BadDelta(f64),
    #[error("final acceptance ratio {0} exceeds 1")]
    RatioOverflow(f64),
    #[error(transparent)]
    Pair(#[from] PairError),
    #[error(transparent)]
    Component(#[from] ComponentError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvCdfError {
    #[error("table needs at least two points, got {0}")]
    TableTooSmall(usize),
    #[error("probability {0} outside (0, 1)")]
    ProbabilityDomain(f64),
    #[error("no convergence after {0} iterations")]
    MaxIterations(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },
    #[error("unsupported generator setting: {0}")]
    BadSpec(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}
