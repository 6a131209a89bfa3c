//! Propagators at the Gaussian level. The full propagator is never
//! exponentiated directly; it is assembled from its factorization
//!
//! ```text
//! ρ(t) = filter⁻¹ ∘ exp(−(w4/2){B†,·,B†}) ∘ (U_s · U_s†) ρ(0)
//! ```
//!
//! where each factor has a closed-form action on means and covariances.

use nalgebra::{Matrix2, Vector2};

use crate::algebra::{conjugate_by_flow, lowering_b, split_r, GeneralizedLoweringOp, RSplit, SplitStrategy};
use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, QuasiGaussian};
use crate::model::QdeCoefficients;
use crate::ode::{self, Tolerance};
use crate::wsolve::{w_at, WPoint, DEFAULT_REL_TOL};

/// Tolerance on `det S = 1`.
pub const SYMPLECTIC_TOL: f64 = 1e-10;

/// Action of a quadratic unitary on `(q, p)`, carried from `t0` to `t1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticMatrix {
    m: Matrix2<f64>,
    t0: f64,
    t1: f64,
}

impl SymplecticMatrix {
    pub fn new(m: Matrix2<f64>, t0: f64, t1: f64) -> Result<Self> {
        let s = Self { m, t0, t1 };
        s.check()?;
        Ok(s)
    }

    pub fn identity(t: f64) -> Self {
        Self { m: Matrix2::identity(), t0: t, t1: t }
    }

    /// `[[cos θ, sin θ], [−sin θ, cos θ]]`, the flow of `H = (q² + p²)/2` for time θ.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { m: Matrix2::new(c, s, -s, c), t0: 0.0, t1: theta }
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        self.m
    }

    pub fn times(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    pub fn check(&self) -> Result<()> {
        let det = self.m.determinant();
        if (det - 1.0).abs() > SYMPLECTIC_TOL || !det.is_finite() {
            return Err(Error::NonSymplectic { det });
        }
        Ok(())
    }

    /// The flow from `t1` back to `t0`.
    pub fn inverse(&self) -> Self {
        let m = self.m;
        Self { m: Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]), t0: self.t1, t1: self.t0 }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &SymplecticMatrix) -> Self {
        Self { m: next.m * self.m, t0: self.t0, t1: next.t1 }
    }
}

/// Integrate `dS/dt = 2 [[b12, b22], [−b11, −b12]] S` from identity at `t0` to `t1`.
pub fn symplectic_flow(coeffs: &QdeCoefficients, t0: f64, t1: f64, rel_tol: f64) -> Result<SymplecticMatrix> {
    let tol = Tolerance { rel: rel_tol, abs: rel_tol * 1e-2, max_step: None };
    let f = |t: f64, y: &[f64; 4]| {
        let c = coeffs.sample(t)?;
        let a = [[2.0 * c.b12, 2.0 * c.b22], [-2.0 * c.b11, -2.0 * c.b12]];
        Ok([
            a[0][0] * y[0] + a[0][1] * y[2],
            a[0][0] * y[1] + a[0][1] * y[3],
            a[1][0] * y[0] + a[1][1] * y[2],
            a[1][0] * y[1] + a[1][1] * y[3],
        ])
    };
    let nodes = ode::integrate(f, t0, [1.0, 0.0, 0.0, 1.0], t1, tol)?;
    let y = nodes[nodes.len() - 1].y;
    SymplecticMatrix::new(Matrix2::new(y[0], y[1], y[2], y[3]), t0, t1)
}

/// Mean → `S·mean`, covariance → `S Σ Sᵀ`.
pub fn apply_symplectic(s: &SymplecticMatrix, state: &GaussianState) -> GaussianState {
    let [q, p] = state.mean();
    let mean = s.m * Vector2::new(q, p);
    let cov = s.m * state.cov() * s.m.transpose();
    GaussianState::from_parts_unchecked(mean, symmetrize(cov), state.hbar())
}

fn symmetrize(m: Matrix2<f64>) -> Matrix2<f64> {
    let o = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    Matrix2::new(m[(0, 0)], o, o, m[(1, 1)])
}

/// `exp(−f{B†,·,B†})`: moments relax toward the vacuum of `op`,
/// `mean → e^{−f} mean`, `Σ → e^{−2f} Σ + (1 − e^{−2f}) Σ_vac(op)`.
pub fn b_decay(state: &GaussianState, op: &GeneralizedLoweringOp, f: f64) -> Result<GaussianState> {
    if !(f >= 0.0) {
        return Err(Error::InvalidParameter { name: "f", value: f, reason: "must be non-negative" });
    }
    if (state.hbar() - op.hbar()).abs() > 1e-12 * op.hbar() {
        return Err(Error::HbarMismatch(state.hbar(), op.hbar()));
    }
    let e = (-f).exp();
    let keep = e * e;
    let [q, p] = state.mean();
    let cov = state.cov() * keep + op.vacuum_covariance() * (-(-2.0 * f).exp_m1());
    Ok(GaussianState::from_parts_unchecked(Vector2::new(e * q, e * p), symmetrize(cov), state.hbar()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDirection {
    /// Apply `exp[e^{−w4}(r1{q,·,q} + r2{p,·,p})]`, removing variance.
    Deconvolve,
    /// The inverse filter, adding variance back.
    Convolve,
}

/// Deconvolution subtracts `2ħ²e^{−w4}r2` from `Σ_qq` and `2ħ²e^{−w4}r1` from
/// `Σ_pp`; convolution adds them. Existence and physicality are reported, not
/// enforced.
pub fn impurity_filter(
    state: &GaussianState,
    split: &RSplit,
    w4: f64,
    hbar: f64,
    direction: FilterDirection,
) -> QuasiGaussian {
    let k = 2.0 * hbar * hbar * (-w4).exp();
    let sign = match direction {
        FilterDirection::Deconvolve => -1.0,
        FilterDirection::Convolve => 1.0,
    };
    let mut cov = state.cov();
    cov[(0, 0)] += sign * k * split.r2;
    cov[(1, 1)] += sign * k * split.r1;
    QuasiGaussian::from_moments(state.mean(), cov, hbar)
}

/// Everything the factorized propagator needs at one time: the w-point, the
/// split, `B(t)`, and the Hamiltonian flow from 0.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub t: f64,
    pub w: WPoint,
    pub split: RSplit,
    pub b: GeneralizedLoweringOp,
    pub flow: SymplecticMatrix,
}

impl Frame {
    pub fn at(coeffs: &QdeCoefficients, t: f64, strategy: SplitStrategy) -> Result<Self> {
        let w = w_at(coeffs, t)?;
        let split = split_r(&w, coeffs.hbar(), strategy)?;
        let b = lowering_b(&w, &split, coeffs.hbar())?;
        let flow = symplectic_flow(coeffs, 0.0, t, DEFAULT_REL_TOL)?;
        Ok(Self { t, w, split, b, flow })
    }

    /// `C(t) = U_s†(t) B(t) U_s(t)`.
    pub fn c(&self) -> Result<GeneralizedLoweringOp> {
        conjugate_by_flow(&self.b, &self.flow)
    }

    pub fn hbar(&self) -> f64 {
        self.b.hbar()
    }

    /// Flow, then B-decay; the deconvolution-picture state.
    pub fn dp_propagate(&self, s0: &GaussianState) -> Result<GaussianState> {
        b_decay(&apply_symplectic(&self.flow, s0), &self.b, 0.5 * self.w.w4)
    }

    /// The deconvolution-picture state with the inverse filter applied.
    pub fn schrodinger_propagate(&self, s0: &GaussianState) -> Result<GaussianState> {
        let dp = self.dp_propagate(s0)?;
        impurity_filter(&dp, &self.split, self.w.w4, self.hbar(), FilterDirection::Convolve).state()
    }

    pub fn deconvolve(&self, s: &GaussianState) -> QuasiGaussian {
        impurity_filter(s, &self.split, self.w.w4, self.hbar(), FilterDirection::Deconvolve)
    }
}

/// The Schrödinger-picture state at `t`; independent of the split strategy.
pub fn schrodinger_propagate(
    coeffs: &QdeCoefficients,
    s0: &GaussianState,
    t: f64,
    strategy: SplitStrategy,
) -> Result<GaussianState> {
    Frame::at(coeffs, t, strategy)?.schrodinger_propagate(s0)
}

/// The deconvolution-picture state at `t`.
pub fn dp_propagate(
    coeffs: &QdeCoefficients,
    s0: &GaussianState,
    t: f64,
    strategy: SplitStrategy,
) -> Result<GaussianState> {
    Frame::at(coeffs, t, strategy)?.dp_propagate(s0)
}

/// Moments of `ρ(t)` straight from the w-point, with no split:
/// `Σ(t) = e^{−w4} S Σ0 Sᵀ + 2ħ² e^{−w4} [[w2, w3], [w3, w1]]`, mean `e^{−w4/2} S m0`.
pub fn direct_moments(s: &SymplecticMatrix, w: &WPoint, s0: &GaussianState) -> (Vector2<f64>, Matrix2<f64>) {
    let h = s0.hbar();
    let e = (-w.w4).exp();
    let [q, p] = s0.mean();
    let mean = s.m * Vector2::new(q, p) * e.sqrt();
    let noise = Matrix2::new(w.w2, w.w3, w.w3, w.w1) * (2.0 * h * h * e);
    (mean, s.m * s0.cov() * s.m.transpose() * e + noise)
}
