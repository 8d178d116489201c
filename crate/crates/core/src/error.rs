use core::fmt;

/// Errors raised by the physics, solver and optimizer layers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Injection energy below the source band edge.
    NegativeKineticEnergy {
        energy: f64,
    },
    /// No propagating state in the drain contact (`E + V0 < 0`).
    EvanescentDrain {
        energy: f64,
        bias: f64,
    },
    DivisionByZero,
    /// Square root of a negative value.
    SqrtDomain {
        value: f64,
    },
    /// Thomas elimination met a pivot below the relative magnitude guard.
    SingularPivot {
        index: usize,
    },
    /// The solved state failed the residual acceptance check.
    ResidualTooLarge {
        residual: f64,
        bound: f64,
    },
    /// A parameter or configuration value violates its invariant.
    InvalidParameter {
        name: &'static str,
        value: f64,
    },
    /// Two vectors that must agree in length do not.
    LengthMismatch {
        expected: usize,
        found: usize,
    },
    /// The loss became NaN or infinite at the given iteration.
    NonFiniteLoss {
        iteration: usize,
    },
    AllStartsFailed,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NegativeKineticEnergy { energy } => {
                write!(f, "energy {energy} eV lies below the source band edge")
            }
            Error::EvanescentDrain { energy, bias } => {
                write!(
                    f,
                    "no propagating drain state at E = {energy} eV, V0 = {bias} eV"
                )
            }
            Error::DivisionByZero => f.write_str("division by zero"),
            Error::SqrtDomain { value } => write!(f, "square root of negative value {value}"),
            Error::SingularPivot { index } => write!(f, "singular pivot at row {index}"),
            Error::ResidualTooLarge { residual, bound } => {
                write!(f, "solve residual {residual:e} exceeds bound {bound:e}")
            }
            Error::InvalidParameter { name, value } => {
                write!(f, "invalid value {value} for parameter `{name}`")
            }
            Error::LengthMismatch { expected, found } => {
                write!(f, "length mismatch: expected {expected}, found {found}")
            }
            Error::NonFiniteLoss { iteration } => {
                write!(f, "loss became non-finite at iteration {iteration}")
            }
            Error::AllStartsFailed => f.write_str("every optimization start failed"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
