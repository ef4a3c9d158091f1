use thiserror::Error;

use crate::dynamics::Trajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("non-finite coefficient in equation {equation}")]
    NonFiniteCoefficient { equation: usize },
}

#[derive(Debug, Error)]
pub enum CrnError {
    #[error("reaction {reaction}: rate must be positive and finite, got {rate}")]
    NonpositiveRate { reaction: usize, rate: f64 },
    #[error("reaction {0}: reactant equals product")]
    NoOpReaction(usize),
    #[error("reaction {reaction}: complex has length {found}, expected {expected}")]
    ComplexLength { reaction: usize, expected: usize, found: usize },
    #[error("duplicate species name `{0}`")]
    DuplicateSpecies(String),
    #[error("invalid species name `{0}`")]
    InvalidSpeciesName(String),
    #[error("unknown species `{0}`")]
    UnknownSpecies(String),
    #[error("system is not kinetic: {count} negative cross term(s), first in equation {first_equation}")]
    NotKinetic { count: usize, first_equation: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructionError {
    #[error("rate constant k[{center}][{index}] = {value} is not positive")]
    NonpositiveRate { center: usize, index: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Error, Clone)]
pub enum IntegrationError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("trajectory diverged at t = {t}")]
    Diverged { t: f64, partial: Box<Trajectory> },
    #[error("step budget of {steps} exhausted at t = {t}")]
    StepBudgetExhausted { t: f64, steps: usize },
    #[error("initial state has length {found}, field dimension is {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("initial state is not finite")]
    NonFiniteState,
    #[error("invalid integrator settings: {0}")]
    InvalidSettings(String),
    #[error("singular iteration matrix at t = {t}")]
    SingularMatrix { t: f64 },
}

impl IntegrationError {
    /// Short machine-readable tag used in run indexes.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::StepSizeUnderflow { .. } => "StepSizeUnderflow",
            Self::Diverged { .. } => "Diverged",
            Self::StepBudgetExhausted { .. } => "StepBudgetExhausted",
            Self::DimensionMismatch { .. } => "DimensionMismatch",
            Self::NonFiniteState => "NonFiniteState",
            Self::InvalidSettings(_) => "InvalidSettings",
            Self::SingularMatrix { .. } => "SingularMatrix",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("trajectory too short: {crossings} section crossing(s) after the transient, need 3")]
    TooShort { crossings: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}
