use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("coefficients undefined at t = {t} (valid range [{lo}, {hi}])")]
    CoefficientUndefined { t: f64, lo: f64, hi: f64 },

    #[error("time {t} outside trajectory range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integrator produced a non-finite value at t = {t}")]
    NonFinite { t: f64 },

    #[error("dissipation parameter w4 = {w4} must be positive")]
    NonPositiveDissipation { w4: f64 },

    #[error("unphysical w-point: {0}")]
    UnphysicalPoint(&'static str),

    #[error("symmetric split requires w3 = 0, got w3 = {w3:.3e}")]
    NotSymmetric { w3: f64 },

    #[error("matrix is not symplectic (det = {det})")]
    NonSymplectic { det: f64 },

    #[error("operator violates the unit commutator (2ħ Im(u*v) = {value})")]
    CommutatorViolation { value: f64 },

    #[error("invalid Gaussian state: {0}")]
    InvalidState(&'static str),

    #[error("operation requires a pure state (purity = {purity})")]
    MixedState { purity: f64 },

    #[error("ħ mismatch: {0} vs {1}")]
    HbarMismatch(f64, f64),

    #[error("entropy diagnostics run in natural units, got ħ = {hbar}")]
    NaturalUnitsRequired { hbar: f64 },

    #[error("quadrature grid too small: mass deficit {deficit:.3e}")]
    GridTooSmall { deficit: f64 },

    #[error("Fock truncation too small: mass deficit {deficit:.3e}")]
    TruncationDeficit { deficit: f64 },

    #[error("ket norm underflow")]
    NormUnderflow,

    #[error("impurity filter output does not exist")]
    FilterNonexistent,

    #[error("coefficient table: {0}")]
    Table(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}
