//! Crate-wide error type.
//!
//! Variants carry enough context to render a useful one-line message; exact
//! quantities (like normalization deficits) are carried in display form so
//! the type stays independent of the amplitude backend.

use alloc::string::String;
use core::fmt;

use crate::state::RegisterId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Error {
    /// Register name not present in the state at the referenced time.
    UnknownRegister { register: RegisterId, at_step: usize },
    /// Two registers with the same name.
    DuplicateRegister { register: RegisterId },
    /// More registers than the engine's configuration cap.
    TooManyRegisters { count: usize, max: usize },
    /// State terms whose squared amplitudes do not sum to one.
    NotNormalized { deficit: String },
    /// Term configuration has the wrong number of outcome bits.
    BadConfigWidth { expected: usize, got: usize },
    /// Absorb-style measurement aimed at a register that is already some
    /// agent's record.
    TargetIsRecord { register: RegisterId },
    /// Collapse requested on an outcome with exactly zero probability.
    ZeroProbabilityCollapse { step: usize },
    /// Collapse renormalization factor does not exist in the exact ring.
    NormOutsideRing { step: usize },
    /// Backward transport would cross a collapse step.
    NonUnitarySegment { step: usize },
    /// State does not lie in the range of the forward map being inverted
    /// (or a joint-basis step was applied outside its domain).
    OutsideRange { step: usize },
    /// Step or snapshot index beyond the history.
    StepOutOfRange { step: usize, len: usize },
    /// Chain events not in chronological order.
    UnsortedEvents,
    /// Two same-step events on the same register in different bases.
    ConflictingEvents { register: RegisterId, at_step: usize },
    /// Statement with an empty premise list.
    EmptyPremises,
    /// Outcome label does not name an outcome of the register/basis pair.
    UnknownLabel { register: RegisterId, label: String },
    /// Outcome selector incompatible with the basis (e.g. a listed joint
    /// outcome against a two-level basis).
    BadOutcome { reason: &'static str },
    /// Basis unusable here (wrong target count, non-orthonormal joint kets,
    /// or a rotation with no exact representation in exact mode).
    InvalidBasis { reason: &'static str },
    /// Operation needs the float backend (free rotation angle or phase).
    UnsupportedInExactMode { what: &'static str },
    /// Probability ratio whose denominator is irrational in exact mode.
    IrrationalProbability,
    /// Transitivity check where the first statement's conclusion is not the
    /// second statement's sole premise.
    ChainMismatch,
    /// Or-composition branches whose premises do not cover one complete
    /// outcome set of a single observable.
    IncompleteOutcomeSet,
    /// Or-composition branches or merged statement conclude differently.
    MismatchedConclusions,
    /// Violation fraction with both branch amplitudes zero.
    BothZero,
    /// Inner product or comparison between states over different registers.
    RegisterMismatch,
    /// Collapse sampling requested without a random source.
    MissingSampler { step: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnknownRegister { register, at_step } => {
                write!(f, "register `{register}` does not exist at step {at_step}")
            }
            Error::DuplicateRegister { register } => {
                write!(f, "duplicate register `{register}`")
            }
            Error::TooManyRegisters { count, max } => {
                write!(f, "{count} registers exceed the cap of {max}")
            }
            Error::NotNormalized { deficit } => {
                write!(f, "state is not normalized (deficit {deficit})")
            }
            Error::BadConfigWidth { expected, got } => {
                write!(f, "term lists {got} outcomes for {expected} registers")
            }
            Error::TargetIsRecord { register } => {
                write!(f, "cannot absorb `{register}`: it is already a record")
            }
            Error::ZeroProbabilityCollapse { step } => {
                write!(f, "step {step}: collapse outcome has probability zero")
            }
            Error::NormOutsideRing { step } => {
                write!(f, "step {step}: collapse norm has no exact square root")
            }
            Error::NonUnitarySegment { step } => {
                write!(f, "cannot evolve backward across collapse step {step}")
            }
            Error::OutsideRange { step } => {
                write!(f, "state lies outside the range of step {step}")
            }
            Error::StepOutOfRange { step, len } => {
                write!(f, "step {step} outside history of {len} steps")
            }
            Error::UnsortedEvents => write!(f, "chain events are not in chronological order"),
            Error::ConflictingEvents { register, at_step } => {
                write!(
                    f,
                    "conflicting bases for `{register}` at step {at_step} are ill-formed"
                )
            }
            Error::EmptyPremises => write!(f, "statement has no premises"),
            Error::UnknownLabel { register, label } => {
                write!(f, "`{label}` is not an outcome label of `{register}`")
            }
            Error::BadOutcome { reason } => write!(f, "bad outcome selector: {reason}"),
            Error::InvalidBasis { reason } => write!(f, "invalid basis: {reason}"),
            Error::UnsupportedInExactMode { what } => {
                write!(f, "{what} requires float mode")
            }
            Error::IrrationalProbability => {
                write!(f, "probability ratio is irrational in exact mode")
            }
            Error::ChainMismatch => {
                write!(
                    f,
                    "first conclusion does not match the second statement's premise"
                )
            }
            Error::IncompleteOutcomeSet => {
                write!(f, "branch premises do not cover a complete outcome set")
            }
            Error::MismatchedConclusions => {
                write!(f, "branch statements do not share one conclusion")
            }
            Error::BothZero => write!(f, "violation fraction of two zero amplitudes"),
            Error::RegisterMismatch => write!(f, "states are over different registers"),
            Error::MissingSampler { step } => {
                write!(f, "step {step} samples its outcome but no seed was given")
            }
        }
    }
}
