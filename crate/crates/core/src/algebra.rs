//! Generalized lowering operators `u·q + v·p` with `[B, B†] = 1`, the r-split
//! that selects the impurity filter, and the Bogoliubov decomposition
//! `B = μ a + ν a†` against the reference mode `a = (q + ip)/√(2ħ)`.

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;

use crate::channels::SymplecticMatrix;
use crate::error::{positive, Error, Result};
use crate::wsolve::WPoint;
use crate::model::BOUNDARY_TOL;

/// Tolerance on `2ħ Im(u* v) = 1`.
pub const COMMUTATOR_TOL: f64 = 1e-10;

/// The operator `u q + v p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedLoweringOp {
    u: C64,
    v: C64,
    hbar: f64,
}

impl GeneralizedLoweringOp {
    pub fn new(u: C64, v: C64, hbar: f64) -> Result<Self> {
        let op = Self { u, v, hbar: positive("hbar", hbar)? };
        let value = op.commutator();
        if (value - 1.0).abs() > COMMUTATOR_TOL {
            return Err(Error::CommutatorViolation { value });
        }
        Ok(op)
    }

    /// The usual lowering operator `a = (q + ip)/√(2ħ)`.
    pub fn standard(hbar: f64) -> Self {
        let s = 1.0 / (2.0 * hbar).sqrt();
        Self { u: C64::new(s, 0.0), v: C64::new(0.0, s), hbar }
    }

    /// `μ a + ν a†`; requires `|μ|² − |ν|² = 1`.
    pub fn from_bogoliubov(b: Bogoliubov, hbar: f64) -> Result<Self> {
        let s = 1.0 / (2.0 * hbar).sqrt();
        Self::new((b.mu + b.nu) * s, C64::i() * (b.mu - b.nu) * s, hbar)
    }

    pub fn u(&self) -> C64 {
        self.u
    }

    pub fn v(&self) -> C64 {
        self.v
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// `[B, B†]` expressed in coefficients: `2ħ Im(u* v)`.
    pub fn commutator(&self) -> f64 {
        2.0 * self.hbar * (self.u.conj() * self.v).im
    }

    /// Multiply by a unit phase; eigenstates are unchanged, eigenvalues rotate.
    pub fn with_phase(&self, phase: f64) -> Self {
        let z = C64::from_polar(1.0, phase);
        Self { u: self.u * z, v: self.v * z, hbar: self.hbar }
    }

    /// Covariance (qq, qp, pp ordering) of the state annihilated by this operator:
    /// `ħ² [[|v|², −Re(u* v)], [−Re(u* v), |u|²]]`.
    pub fn vacuum_covariance(&self) -> Matrix2<f64> {
        let h2 = self.hbar * self.hbar;
        let c = -(self.u.conj() * self.v).re;
        Matrix2::new(h2 * self.v.norm_sqr(), h2 * c, h2 * c, h2 * self.u.norm_sqr())
    }

    /// `⟨B⟩` for given quadrature means.
    pub fn expectation(&self, mean_q: f64, mean_p: f64) -> C64 {
        self.u * mean_q + self.v * mean_p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitStrategy {
    /// `r1 = 0`: the filter only deconvolves position.
    QFilter,
    /// `r2 = 0`: the filter only deconvolves momentum.
    PFilter,
    /// `w1 − r1 = w2 − r2 = (e^{w4} − 1)/(4ħ)`; needs `w3 = 0`.
    ExampleSymmetric,
    /// Caller-supplied values, not tied to any w-point.
    Manual,
}

impl Default for SplitStrategy {
    fn default() -> Self {
        Self::QFilter
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RSplit {
    pub r1: f64,
    pub r2: f64,
    pub strategy: SplitStrategy,
}

impl RSplit {
    pub fn manual(r1: f64, r2: f64) -> Result<Self> {
        if !(r1 >= 0.0 && r2 >= 0.0) {
            return Err(Error::InvalidParameter { name: "r", value: r1.min(r2), reason: "must be non-negative" });
        }
        Ok(Self { r1, r2, strategy: SplitStrategy::Manual })
    }

    /// Check `w1 − r1 > 0`, `w2 − r2 > 0` and the product identity (relative 1e-10).
    pub fn validate_for(&self, w: &WPoint, hbar: f64) -> Result<()> {
        let (a, b) = (w.w1 - self.r1, w.w2 - self.r2);
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::UnphysicalPoint("w − r must be positive"));
        }
        let target = product_target(w, hbar);
        if ((a * b - target) / target).abs() > 1e-10 {
            return Err(Error::UnphysicalPoint("split violates (w1 − r1)(w2 − r2) identity"));
        }
        Ok(())
    }
}

/// `w3² + (e^{w4} − 1)²/(16ħ²)`.
fn product_target(w: &WPoint, hbar: f64) -> f64 {
    let e = w.w4.exp_m1();
    w.w3 * w.w3 + e * e / (16.0 * hbar * hbar)
}

fn require_dissipation(w: &WPoint) -> Result<()> {
    if w.w4 > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveDissipation { w4: w.w4 })
    }
}

/// The angle ξ ∈ [0, π/2] with `2ξ = atan2((e^{w4} − 1)/(4ħ), −w3)`. This is the
/// only branch of `½ tan⁻¹(−(e^{w4} − 1)/(4ħ w3))` with `sin 2ξ ≥ 0`, which the
/// unit commutator of `B` requires.
pub fn xi_angle(w: &WPoint, hbar: f64) -> Result<f64> {
    require_dissipation(w)?;
    Ok(0.5 * (w.w4.exp_m1() / (4.0 * hbar)).atan2(-w.w3))
}

pub fn split_r(w: &WPoint, hbar: f64, strategy: SplitStrategy) -> Result<RSplit> {
    require_dissipation(w)?;
    let target = product_target(w, hbar);
    let (r1, r2) = match strategy {
        SplitStrategy::QFilter => {
            if !(w.w1 > 0.0) {
                return Err(Error::UnphysicalPoint("w1 must be positive"));
            }
            (0.0, w.w2 - target / w.w1)
        }
        SplitStrategy::PFilter => {
            if !(w.w2 > 0.0) {
                return Err(Error::UnphysicalPoint("w2 must be positive"));
            }
            (w.w1 - target / w.w2, 0.0)
        }
        SplitStrategy::ExampleSymmetric => {
            if w.w3.abs() > 1e-8 {
                return Err(Error::NotSymmetric { w3: w.w3 });
            }
            let s = w.w4.exp_m1() / (4.0 * hbar);
            (w.w1 - s, w.w2 - s)
        }
        SplitStrategy::Manual => {
            return Err(Error::InvalidParameter {
                name: "strategy",
                value: f64::NAN,
                reason: "manual splits are built with RSplit::manual",
            })
        }
    };
    let slack = BOUNDARY_TOL * w.w1.abs().max(w.w2.abs());
    if r1 < -slack || r2 < -slack {
        return Err(Error::UnphysicalPoint("split yields a negative r"));
    }
    Ok(RSplit { r1: r1.max(0.0), r2: r2.max(0.0), strategy })
}

/// `B = √(2/(e^{w4} − 1)) (e^{−iξ} √(w1 − r1) q + e^{iξ} √(w2 − r2) p)`.
pub fn lowering_b(w: &WPoint, split: &RSplit, hbar: f64) -> Result<GeneralizedLoweringOp> {
    require_dissipation(w)?;
    split.validate_for(w, hbar)?;
    let xi = xi_angle(w, hbar)?;
    let k = (2.0 / w.w4.exp_m1()).sqrt();
    let u = C64::from_polar(k * (w.w1 - split.r1).sqrt(), -xi);
    let v = C64::from_polar(k * (w.w2 - split.r2).sqrt(), xi);
    GeneralizedLoweringOp::new(u, v, hbar)
}

/// Heisenberg conjugation by a quadratic unitary with symplectic matrix `S`:
/// `(u, v) → (u, v)·S`.
pub fn conjugate_by_flow(op: &GeneralizedLoweringOp, s: &SymplecticMatrix) -> Result<GeneralizedLoweringOp> {
    s.check()?;
    let m = s.matrix();
    let u = op.u * m[(0, 0)] + op.v * m[(1, 0)];
    let v = op.u * m[(0, 1)] + op.v * m[(1, 1)];
    GeneralizedLoweringOp::new(u, v, op.hbar)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bogoliubov {
    pub mu: C64,
    pub nu: C64,
}

impl Bogoliubov {
    pub fn new(mu: C64, nu: C64) -> Result<Self> {
        let value = mu.norm_sqr() - nu.norm_sqr();
        if (value - 1.0).abs() > COMMUTATOR_TOL {
            return Err(Error::CommutatorViolation { value });
        }
        Ok(Self { mu, nu })
    }

    /// `|μ|² − |ν|²`.
    pub fn unitarity(&self) -> f64 {
        self.mu.norm_sqr() - self.nu.norm_sqr()
    }
}

/// Decompose `op = μ a + ν a†`: `μ = √(ħ/2)(u − iv)`, `ν = √(ħ/2)(u + iv)`.
pub fn bogoliubov(op: &GeneralizedLoweringOp) -> Bogoliubov {
    let s = (op.hbar / 2.0).sqrt();
    let iv = C64::i() * op.v;
    Bogoliubov { mu: (op.u - iv) * s, nu: (op.u + iv) * s }
}

/// `e^{−iπ/4} a`, the time-independent operator of the worked squeezing example.
pub fn rotated_standard(hbar: f64) -> GeneralizedLoweringOp {
    GeneralizedLoweringOp::standard(hbar).with_phase(-std::f64::consts::FRAC_PI_4)
}
