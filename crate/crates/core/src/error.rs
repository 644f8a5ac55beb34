use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mark space must contain at least one mark with distinct identifiers")]
    InvalidMarkSpace,

    #[error("time grid must start at 0 and be strictly increasing: {0}")]
    InvalidGrid(String),

    #[error("jump size {value} at step {step} is outside [0, 1]")]
    JumpSizeOutOfRange { step: usize, value: f64 },

    #[error("mark law at step {step} is not a probability vector: {reason}")]
    InvalidMarkLaw { step: usize, reason: String },

    #[error("continuous increment {value} at step {step} is negative or not finite")]
    InvalidContinuousIncrement { step: usize, value: f64 },

    #[error("solver models must be purely discrete; step {step} has continuous increment {value}")]
    ContinuousCompensator { step: usize, value: f64 },

    #[error("beta must be {requirement}, got {value}")]
    InvalidBeta { value: f64, requirement: &'static str },

    #[error("terminal condition has {got} values but the tree has {expected} leaves")]
    TerminalLength { expected: usize, got: usize },

    #[error("delta {delta} is outside its admissible range {range}")]
    DeltaOutOfRange { delta: f64, range: String },

    #[error("2 L_y^2 |dA|^2 = {value} at slot {slot} violates the main hypothesis")]
    ConditionViolated { slot: usize, value: f64 },

    #[error("threshold denominator {value} is nonpositive at slot {slot}")]
    DenominatorNonpositive { slot: usize, value: f64 },

    #[error("one-step map at slot {slot} is not a contraction (dA * L_y = {factor}); no solution")]
    StepSingular { slot: usize, factor: f64 },

    #[error("one-step equation at slot {slot} has a continuum of solutions")]
    Degenerate { slot: usize },

    #[error("non-finite iterate at slot {slot}")]
    NonFinite { slot: usize },

    #[error("no convergence after {iterations} iterations (last distance {last_distance})")]
    NoConvergence { iterations: usize, last_distance: f64 },

    #[error("some jump size {delta_a} exceeds 1 - gamma = {bound}")]
    GammaViolated { delta_a: f64, bound: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
