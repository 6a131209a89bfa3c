//! Single-mode Gaussian states described by quadrature means and the
//! symmetrized covariance `Σ_qp = ½⟨qp + pq⟩ − ⟨q⟩⟨p⟩`. Global phase is not
//! represented.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64 as C64;

use crate::algebra::GeneralizedLoweringOp;
use crate::error::{positive, Error, Result};

/// Relative slack on `det Σ ≥ ħ²/4` for states produced by floating-point pipelines.
const UNCERTAINTY_SLACK: f64 = 1e-9;

/// Column order of the state CSV format.
pub const STATE_COLUMNS: [&str; 6] = ["hbar", "mq", "mp", "sqq", "sqp", "spp"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    mean: Vector2<f64>,
    cov: Matrix2<f64>,
    hbar: f64,
}

impl GaussianState {
    /// Validates symmetry, positive variances and the uncertainty relation.
    pub fn new(mean: [f64; 2], cov: Matrix2<f64>, hbar: f64) -> Result<Self> {
        let hbar = positive("hbar", hbar)?;
        if mean.iter().chain(cov.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidState("non-finite moment"));
        }
        let scale = cov[(0, 0)].abs() + cov[(1, 1)].abs();
        if (cov[(0, 1)] - cov[(1, 0)]).abs() > 1e-12 * scale {
            return Err(Error::InvalidState("covariance not symmetric"));
        }
        let sym = 0.5 * (cov[(0, 1)] + cov[(1, 0)]);
        let cov = Matrix2::new(cov[(0, 0)], sym, sym, cov[(1, 1)]);
        if !(cov[(0, 0)] > 0.0 && cov[(1, 1)] > 0.0) {
            return Err(Error::InvalidState("variances must be positive"));
        }
        if cov.determinant() < 0.25 * hbar * hbar * (1.0 - UNCERTAINTY_SLACK) {
            return Err(Error::InvalidState("covariance violates the uncertainty relation"));
        }
        Ok(Self { mean: Vector2::new(mean[0], mean[1]), cov, hbar })
    }

    pub fn from_moments(mq: f64, mp: f64, sqq: f64, sqp: f64, spp: f64, hbar: f64) -> Result<Self> {
        Self::new([mq, mp], Matrix2::new(sqq, sqp, sqp, spp), hbar)
    }

    pub fn vacuum(hbar: f64) -> Self {
        Self { mean: Vector2::zeros(), cov: Matrix2::identity() * (hbar / 2.0), hbar }
    }

    /// Coherent state `|α⟩` of `a = (q + ip)/√(2ħ)`.
    pub fn coherent(alpha: C64, hbar: f64) -> Self {
        let s = (2.0 * hbar).sqrt();
        Self { mean: Vector2::new(s * alpha.re, s * alpha.im), ..Self::vacuum(hbar) }
    }

    /// Thermal state with mean occupation `nbar`.
    pub fn thermal(nbar: f64, hbar: f64) -> Self {
        Self { mean: Vector2::zeros(), cov: Matrix2::identity() * (hbar / 2.0 * (2.0 * nbar + 1.0)), hbar }
    }

    pub fn mean(&self) -> [f64; 2] {
        [self.mean[0], self.mean[1]]
    }

    pub fn cov(&self) -> Matrix2<f64> {
        self.cov
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn det(&self) -> f64 {
        self.cov.determinant()
    }

    /// `Tr ρ² = ħ/(2√det Σ)`, capped at 1.
    pub fn purity(&self) -> f64 {
        (self.hbar / (2.0 * self.det().sqrt())).min(1.0)
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        1.0 - self.purity() <= tol
    }

    /// `⟨op⟩ = u⟨q⟩ + v⟨p⟩`.
    pub fn amplitude(&self, op: &GeneralizedLoweringOp) -> C64 {
        op.expectation(self.mean[0], self.mean[1])
    }

    /// The lowering operator that annihilates this pure state up to its mean:
    /// `u = √Σ_pp/ħ`, `v = (−Σ_qp + iħ/2)/(ħ² u)`.
    pub fn annihilator(&self) -> Result<GeneralizedLoweringOp> {
        self.require_pure(1e-8)?;
        let h = self.hbar;
        let u = self.cov[(1, 1)].sqrt() / h;
        let v = C64::new(-self.cov[(0, 1)], 0.5 * h) / (h * h * u);
        GeneralizedLoweringOp::new(C64::new(u, 0.0), v, h)
    }

    fn require_pure(&self, tol: f64) -> Result<()> {
        if self.is_pure(tol) {
            Ok(())
        } else {
            Err(Error::MixedState { purity: self.purity() })
        }
    }

    /// Single-mode Gaussian fidelity `|⟨ψ|φ⟩|²` (generalized to mixed states).
    pub fn fidelity(&self, other: &GaussianState) -> Result<f64> {
        if (self.hbar - other.hbar).abs() > 1e-12 * self.hbar {
            return Err(Error::HbarMismatch(self.hbar, other.hbar));
        }
        let h = self.hbar;
        let v1 = self.cov / h;
        let v2 = other.cov / h;
        let d = (self.mean - other.mean) / h.sqrt();
        let sum = v1 + v2;
        let delta = sum.determinant();
        let lambda = (4.0 * (v1.determinant() - 0.25) * (v2.determinant() - 0.25)).max(0.0);
        let inv = sum.try_inverse().ok_or(Error::InvalidState("singular covariance sum"))?;
        let quad = d.dot(&(inv * d));
        Ok(((-0.5 * quad).exp() / ((delta + lambda).sqrt() - lambda.sqrt())).min(1.0))
    }

    /// Position wavefunction `⟨x|ψ⟩` of a pure state (m = ω = 1).
    pub fn wavefunction(&self, x: f64, convention: PhaseConvention) -> Result<C64> {
        self.require_pure(1e-8)?;
        Ok(self.wavefunction_unchecked(x, convention))
    }

    pub(crate) fn wavefunction_unchecked(&self, x: f64, convention: PhaseConvention) -> C64 {
        let (mq, mp) = (self.mean[0], self.mean[1]);
        let (sqq, sqp) = (self.cov[(0, 0)], self.cov[(0, 1)]);
        let h = self.hbar;
        let dx = x - mq;
        let linear = match convention {
            PhaseConvention::Coherent => mp * x / h,
            PhaseConvention::Displacement => mp * (x - 0.5 * mq) / h,
        };
        let norm = (2.0 * PI * sqq).powf(-0.25);
        let exponent = C64::new(-dx * dx / (4.0 * sqq), sqp * dx * dx / (2.0 * h * sqq) + linear);
        norm * exponent.exp()
    }

    /// `⟨α|ρ|α⟩` in natural units, with `α = (x̃ + ip̃)/√2`.
    pub fn husimi_q(&self, alpha: C64) -> Result<f64> {
        require_natural_units(self.hbar)?;
        let c = self.cov + Matrix2::identity() * 0.5;
        let d = Vector2::new(2f64.sqrt() * alpha.re, 2f64.sqrt() * alpha.im) - self.mean;
        let inv = c.try_inverse().ok_or(Error::InvalidState("singular Husimi covariance"))?;
        Ok((-0.5 * d.dot(&(inv * d))).exp() / c.determinant().sqrt())
    }

    /// `Π|q⟩ = |−q⟩`.
    pub fn apply_parity(&self) -> Self {
        Self { mean: -self.mean, ..*self }
    }

    /// `T(q0, p0) = exp[i(q0 p − p0 q)/ħ]`.
    pub fn apply_translation(&self, q0: f64, p0: f64) -> Self {
        Self { mean: self.mean + Vector2::new(q0, p0), ..*self }
    }

    /// Values in [`STATE_COLUMNS`] order.
    pub fn csv_fields(&self) -> [f64; 6] {
        [self.hbar, self.mean[0], self.mean[1], self.cov[(0, 0)], self.cov[(0, 1)], self.cov[(1, 1)]]
    }

    pub(crate) fn from_parts_unchecked(mean: Vector2<f64>, cov: Matrix2<f64>, hbar: f64) -> Self {
        Self { mean, cov, hbar }
    }
}

pub(crate) fn require_natural_units(hbar: f64) -> Result<()> {
    if (hbar - 1.0).abs() > 1e-12 {
        Err(Error::NaturalUnitsRequired { hbar })
    } else {
        Ok(())
    }
}

/// How the linear phase of a displaced wavefunction is anchored. Both differ
/// only by a global phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseConvention {
    /// `e^{i⟨p⟩x/ħ}`, the usual coherent-state form.
    #[default]
    Coherent,
    /// `e^{i⟨p⟩(x − ⟨q⟩/2)/ħ}`, the phase produced by the displacement operator.
    Displacement,
}

/// The pure Gaussian state with `⟨op⟩ = β` that `op − β` annihilates.
pub fn eigenstate_of(op: &GeneralizedLoweringOp, beta: C64) -> GaussianState {
    let h = op.hbar();
    let q = -2.0 * h * (op.v().conj() * beta).im;
    let p = 2.0 * h * (op.u().conj() * beta).im;
    GaussianState { mean: Vector2::new(q, p), cov: op.vacuum_covariance(), hbar: h }
}

/// Moments that need not describe a density operator: the output of the
/// impurity filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiGaussian {
    pub mean: [f64; 2],
    pub cov: Matrix2<f64>,
    pub hbar: f64,
    /// Both variances positive and the covariance positive definite.
    pub exists: bool,
    /// `det Σ ≥ ħ²/4`.
    pub physical: bool,
}

impl QuasiGaussian {
    pub(crate) fn from_moments(mean: [f64; 2], cov: Matrix2<f64>, hbar: f64) -> Self {
        let det = cov.determinant();
        let exists = cov[(0, 0)] > 0.0 && cov[(1, 1)] > 0.0 && det > 0.0;
        let physical = exists && det >= 0.25 * hbar * hbar * (1.0 - UNCERTAINTY_SLACK);
        Self { mean, cov, hbar, exists, physical }
    }

    pub fn det(&self) -> f64 {
        self.cov.determinant()
    }

    /// The state, when both flags hold.
    pub fn state(&self) -> Result<GaussianState> {
        if !self.exists {
            return Err(Error::FilterNonexistent);
        }
        GaussianState::new(self.mean, self.cov, self.hbar)
    }
}

impl From<GaussianState> for QuasiGaussian {
    fn from(s: GaussianState) -> Self {
        Self::from_moments(s.mean(), s.cov, s.hbar)
    }
}
