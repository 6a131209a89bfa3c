//! Qubits carried by the first moments of a single squeezed state.
//!
//! A pure Gaussian with spreads Δq = √Σ_qq, Δp = √Σ_pp encodes
//! `θ = ⟨q⟩/(√2 Δq)` and `φ = ⟨p⟩/Δp (mod 2π)`; measuring `P₁ = θ(q)` gives
//! outcome 1 with probability `erfc(−θ)/2`. Parity acts as X, a momentum kick
//! of `πΔp` as Z.

use std::f64::consts::{PI, SQRT_2, TAU};

use libm::erfc;
use num_complex::Complex64 as C64;

use crate::algebra::{GeneralizedLoweringOp, SplitStrategy};
use crate::channels::{apply_symplectic, Frame};
use crate::error::{positive, Error, Result};
use crate::gaussian::{eigenstate_of, GaussianState, PhaseConvention, QuasiGaussian};
use crate::model::QdeCoefficients;

/// Purity tolerance for operations defined only on pure states.
const PURE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitCoords {
    pub theta: f64,
    /// In `[0, 2π)`.
    pub phi: f64,
    /// `√(erfc(θ)/2)`, real and non-negative.
    pub a: C64,
    /// `e^{iφ} √(erfc(−θ)/2)`.
    pub b: C64,
}

impl QubitCoords {
    pub fn new(theta: f64, phi: f64) -> Self {
        let phi = phi.rem_euclid(TAU);
        Self {
            theta,
            phi,
            a: C64::new((0.5 * erfc(theta)).sqrt(), 0.0),
            b: C64::from_polar((0.5 * erfc(-theta)).sqrt(), phi),
        }
    }

    /// Coordinates read off any Gaussian's moments, pure or not.
    pub fn from_moments(s: &GaussianState) -> Self {
        let [mq, mp] = s.mean();
        let c = s.cov();
        Self::new(mq / (SQRT_2 * c[(0, 0)].sqrt()), mp / c[(1, 1)].sqrt())
    }

    /// `(|a|², |b|²)`.
    pub fn probabilities(&self) -> (f64, f64) {
        (self.a.norm_sqr(), self.b.norm_sqr())
    }
}

/// A pure state with spreads `(dq, dp)` and correlation `sigma_qp` carrying (θ, φ).
pub fn qubit_encode(theta: f64, phi: f64, dq: f64, dp: f64, sigma_qp: f64, hbar: f64) -> Result<GaussianState> {
    positive("dq", dq)?;
    positive("dp", dp)?;
    let det = dq * dq * dp * dp - sigma_qp * sigma_qp;
    if ((det - 0.25 * hbar * hbar) / (0.25 * hbar * hbar)).abs() > 1e-10 {
        return Err(Error::InvalidState("encoding covariance must be pure"));
    }
    GaussianState::from_moments(SQRT_2 * dq * theta, dp * phi, dq * dq, sigma_qp, dp * dp, hbar)
}

pub fn qubit_decode(s: &GaussianState) -> Result<QubitCoords> {
    if !s.is_pure(PURE_TOL) {
        return Err(Error::MixedState { purity: s.purity() });
    }
    Ok(QubitCoords::from_moments(s))
}

/// `(p0, p1)` with `p1 = ½ erfc(−⟨q⟩/(√2 √Σ_qq))`.
pub fn measure_p1(s: &GaussianState) -> (f64, f64) {
    let x = s.mean()[0] / (SQRT_2 * s.cov()[(0, 0)].sqrt());
    let p1 = 0.5 * erfc(-x);
    (0.5 * erfc(x), p1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    X,
    Y,
    Z,
}

/// X = Π, Z = T(0, πΔp), Y = Z∘X (equal to Y up to global phase), with Δp the
/// state's own momentum spread.
pub fn gate(s: &GaussianState, which: Gate) -> Result<GaussianState> {
    if !s.is_pure(PURE_TOL) {
        return Err(Error::MixedState { purity: s.purity() });
    }
    let kick = PI * s.cov()[(1, 1)].sqrt();
    Ok(match which {
        Gate::X => s.apply_parity(),
        Gate::Z => s.apply_translation(0.0, kick),
        Gate::Y => s.apply_parity().apply_translation(0.0, kick),
    })
}

/// The state a sender transmits so that it is `|β⟩_{B(t*)}`-recoverable at
/// t*: the eigenstate of `B(t*)` pulled back by the Hamiltonian flow, i.e.
/// `|β⟩_{C(t*)}`.
pub fn prepare(frame_star: &Frame, beta: C64) -> GaussianState {
    apply_symplectic(&frame_star.flow.inverse(), &eigenstate_of(&frame_star.b, beta))
}

/// Let the channel run until `t` and apply the impurity filter belonging to `t`.
pub fn receive(coeffs: &QdeCoefficients, sent: &GaussianState, t: f64, strategy: SplitStrategy) -> Result<(Frame, QuasiGaussian)> {
    let frame = Frame::at(coeffs, t, strategy)?;
    let evolved = frame.schrodinger_propagate(sent)?;
    Ok((frame, frame.deconvolve(&evolved)))
}

#[derive(Debug, Clone, Copy)]
pub struct NotCircuit {
    /// After priming, evolution, filtering and parity.
    pub output: GaussianState,
    /// Filter output before the parity gate, with its flags.
    pub filtered: QuasiGaussian,
    /// `|−β e^{−w4(t*)/2}⟩_{B(t*)}`.
    pub target: GaussianState,
    pub frame: Frame,
}

impl NotCircuit {
    /// Output amplitude in the `B(t*)` frame.
    pub fn amplitude(&self) -> C64 {
        self.output.amplitude(&self.frame.b)
    }

    pub fn fidelity(&self) -> Result<f64> {
        self.output.fidelity(&self.target)
    }
}

/// Prime `|β⟩_{B(t*)}` with the inverse flow, run the dynamics to t*, apply the
/// impurity filter, then parity.
pub fn not_circuit(coeffs: &QdeCoefficients, beta: C64, t_star: f64, strategy: SplitStrategy) -> Result<NotCircuit> {
    let frame = Frame::at(coeffs, t_star, strategy)?;
    let (_, filtered) = receive(coeffs, &prepare(&frame, beta), t_star, strategy)?;
    let output = filtered.state()?.apply_parity();
    let target = eigenstate_of(&frame.b, -beta * (-0.5 * frame.w.w4).exp());
    Ok(NotCircuit { output, filtered, target, frame })
}

/// Midpoint grid for the two-mode CNOT output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnotGridSpec {
    pub points: usize,
    /// Half-width beyond the displaced mean, in standard deviations.
    pub extent: f64,
}

impl Default for CnotGridSpec {
    fn default() -> Self {
        Self { points: 512, extent: 8.0 }
    }
}

/// `ψ(q1, q2)` sampled on a rectangular midpoint grid, row-major in `q1`.
#[derive(Debug, Clone)]
pub struct TwoModeGrid {
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub dq1: f64,
    pub dq2: f64,
    pub psi: Vec<C64>,
    pub norm: f64,
}

impl TwoModeGrid {
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.psi[i * self.q2.len() + j]
    }
}

#[derive(Debug, Clone)]
pub struct CnotOutcome {
    pub grid: TwoModeGrid,
    /// `joint[c][t]`: probability of control outcome c and target outcome t
    /// (outcome 1 ⇔ positive position).
    pub joint: [[f64; 2]; 2],
    /// `conditional[c][t] = joint[c][t] / Σ_t joint[c][t]`; rows sum to 1.
    pub conditional: [[f64; 2]; 2],
    pub control_p1: f64,
}

/// `(P₀ ⊗ 1 + P₁ ⊗ Π)(|0⟩_B ⊗ |β⟩_B)` in the position representation:
/// `ψ(q1, q2) = ⟨q1|0⟩_B [θ(−q1)⟨q2|β⟩_B + θ(q1)⟨q2|−β⟩_B]`.
pub fn cnot_apply(beta: C64, op: &GeneralizedLoweringOp, spec: CnotGridSpec) -> Result<CnotOutcome> {
    if spec.extent < 6.0 {
        return Err(Error::InvalidParameter { name: "extent", value: spec.extent, reason: "must cover at least 6σ" });
    }
    if spec.points < 2 || spec.points % 2 == 1 {
        return Err(Error::InvalidParameter { name: "points", value: spec.points as f64, reason: "must be even and ≥ 2" });
    }
    let control = eigenstate_of(op, C64::new(0.0, 0.0));
    let target = eigenstate_of(op, beta);
    let flipped = target.apply_parity();
    let sigma = control.cov()[(0, 0)].sqrt();
    let half1 = spec.extent * sigma;
    let half2 = target.mean()[0].abs() + spec.extent * sigma;
    let n = spec.points;
    let midpoints = |half: f64| -> (Vec<f64>, f64) {
        let h = 2.0 * half / n as f64;
        ((0..n).map(|i| -half + (i as f64 + 0.5) * h).collect(), h)
    };
    let (q1, dq1) = midpoints(half1);
    let (q2, dq2) = midpoints(half2);

    let conv = PhaseConvention::Displacement;
    let phi0: Vec<C64> = q1.iter().map(|&x| control.wavefunction_unchecked(x, conv)).collect();
    let phi_b: Vec<C64> = q2.iter().map(|&x| target.wavefunction_unchecked(x, conv)).collect();
    let phi_f: Vec<C64> = q2.iter().map(|&x| flipped.wavefunction_unchecked(x, conv)).collect();

    let mut psi = Vec::with_capacity(n * n);
    let mut joint = [[0.0; 2]; 2];
    for (i, &x1) in q1.iter().enumerate() {
        let c = usize::from(x1 > 0.0);
        let branch = if c == 1 { &phi_f } else { &phi_b };
        for (j, &x2) in q2.iter().enumerate() {
            let v = phi0[i] * branch[j];
            joint[c][usize::from(x2 > 0.0)] += v.norm_sqr();
            psi.push(v);
        }
    }
    let cell = dq1 * dq2;
    let mut norm = 0.0;
    for row in joint.iter_mut() {
        for p in row.iter_mut() {
            *p *= cell;
            norm += *p;
        }
    }
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::GridTooSmall { deficit: (norm - 1.0).abs() });
    }
    let mut conditional = [[0.0; 2]; 2];
    for c in 0..2 {
        let row = joint[c][0] + joint[c][1];
        for t in 0..2 {
            conditional[c][t] = joint[c][t] / row;
        }
    }
    let control_p1 = joint[1][0] + joint[1][1];
    Ok(CnotOutcome { grid: TwoModeGrid { q1, q2, dq1, dq2, psi, norm }, joint, conditional, control_p1 })
}
