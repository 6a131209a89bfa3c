use std::fmt;

use squeezelab::Error;

/// Failure classes with stable process exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Io(String),
    Config(String),
    Physicality(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Physicality(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Physicality(m) => write!(f, "physicality violation: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidParameter { .. }
            | Error::CoefficientUndefined { .. }
            | Error::OutOfRange { .. }
            | Error::HbarMismatch(..)
            | Error::NaturalUnitsRequired { .. }
            | Error::Table(_) => CliError::Config(msg),
            Error::NonPositiveDissipation { .. }
            | Error::UnphysicalPoint(_)
            | Error::NotSymmetric { .. }
            | Error::InvalidState(_)
            | Error::MixedState { .. }
            | Error::FilterNonexistent => CliError::Physicality(msg),
            Error::StepSizeUnderflow { .. }
            | Error::NonFinite { .. }
            | Error::NonSymplectic { .. }
            | Error::CommutatorViolation { .. }
            | Error::GridTooSmall { .. }
            | Error::TruncationDeficit { .. }
            | Error::NormUnderflow => CliError::Numerical(msg),
        }
    }
}
