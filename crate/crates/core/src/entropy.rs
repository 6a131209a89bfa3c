//! Wehrl and von Neumann entropies of Gaussian states, brute-force Husimi
//! quadrature, and the noise window around the privileged time.
//!
//! Everything here works in natural units (ħ = m = ω = 1) and refuses states
//! with any other ħ. The Wehrl entropy of a Gaussian with covariance Σ is
//! `1 + ½ ln det(Σ + ½I)`, since its Husimi function is a Gaussian of
//! covariance `Σ + ½I` under the measure `dx̃ dp̃ / 2π`.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64 as C64;

use crate::algebra::{bogoliubov, conjugate_by_flow, Bogoliubov, GeneralizedLoweringOp, SplitStrategy};
use crate::channels::{symplectic_flow, Frame};
use crate::error::{Error, Result};
use crate::gaussian::{eigenstate_of, require_natural_units, GaussianState};
use crate::model::QdeCoefficients;
use crate::wsolve::DEFAULT_REL_TOL;

/// `S_W − 1 = ½ ln det(Σ + ½I)`, evaluated without cancellation near 1.
pub fn wehrl_excess(s: &GaussianState) -> Result<f64> {
    require_natural_units(s.hbar())?;
    let c = s.cov();
    let d = (s.det() - 0.25) + 0.5 * (c[(0, 0)] + c[(1, 1)] - 1.0);
    Ok(0.5 * d.ln_1p())
}

pub fn wehrl_gaussian(s: &GaussianState) -> Result<f64> {
    Ok(1.0 + wehrl_excess(s)?)
}

/// `1 + ln √(1 + |ν|² e^{−w4}(2 − e^{−w4}))`.
pub fn wehrl_dp_closed_form(nu_abs: f64, w4: f64) -> f64 {
    let x = (-w4).exp();
    1.0 + 0.5 * (nu_abs * nu_abs * x * (2.0 - x)).ln_1p()
}

/// `S = (ν + ½) ln(ν + ½) − (ν − ½) ln(ν − ½)` with symplectic eigenvalue `ν = √det Σ`.
pub fn von_neumann_gaussian(s: &GaussianState) -> Result<f64> {
    require_natural_units(s.hbar())?;
    let nu = s.det().sqrt();
    let (a, b) = (nu + 0.5, nu - 0.5);
    if b <= 1e-15 {
        return Ok(0.0);
    }
    Ok(a * a.ln() - b * b.ln())
}

/// A uniform square-ish grid in the `(x̃, p̃)` plane, centred on the Husimi mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Points per axis.
    pub points: usize,
    /// Half-width in standard deviations of the Husimi distribution.
    pub extent: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { points: 301, extent: 10.0 }
    }
}

/// Result of integrating a phase-space density over a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub entropy: f64,
    pub mass: f64,
}

/// Trapezoidal `−(1/2π)∫ Q ln Q` and `(1/2π)∫ Q` over a box.
pub fn husimi_quadrature(
    q: impl Fn(f64, f64) -> f64,
    center: [f64; 2],
    half_width: [f64; 2],
    points: usize,
) -> Quadrature {
    let n = points.max(3);
    let hx = 2.0 * half_width[0] / (n - 1) as f64;
    let hp = 2.0 * half_width[1] / (n - 1) as f64;
    let (mut mass, mut ent) = (0.0, 0.0);
    for i in 0..n {
        let x = center[0] - half_width[0] + i as f64 * hx;
        let wi = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        for j in 0..n {
            let p = center[1] - half_width[1] + j as f64 * hp;
            let w = wi * if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            let v = q(x, p);
            mass += w * v;
            if v > 0.0 {
                ent -= w * v * v.ln();
            }
        }
    }
    let scale = hx * hp / (2.0 * std::f64::consts::PI);
    Quadrature { entropy: ent * scale, mass: mass * scale }
}

/// Mass deficit above which a quadrature is rejected.
pub const MASS_TOL: f64 = 1e-8;

/// Wehrl entropy by direct quadrature of the Husimi function.
pub fn wehrl_numeric(s: &GaussianState, grid: GridSpec) -> Result<f64> {
    require_natural_units(s.hbar())?;
    if grid.extent < 6.0 {
        return Err(Error::InvalidParameter { name: "extent", value: grid.extent, reason: "must cover at least 6σ" });
    }
    let c = s.cov() + Matrix2::identity() * 0.5;
    let half = [grid.extent * c[(0, 0)].sqrt(), grid.extent * c[(1, 1)].sqrt()];
    let r = husimi_quadrature(
        |x, p| s.husimi_q(C64::new(x, p) / 2f64.sqrt()).unwrap_or(0.0),
        s.mean(),
        half,
        grid.points,
    );
    if (r.mass - 1.0).abs() > MASS_TOL {
        return Err(Error::GridTooSmall { deficit: (r.mass - 1.0).abs() });
    }
    Ok(r.entropy)
}

/// The matrix σ(τ) in `(α, α*)` coordinates for a squeezed state decaying
/// under `exp(−(w4 τ/2){a†,·,a†})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HusimiSigma {
    pub sigma: Matrix2<C64>,
    pub bog: Bogoliubov,
    pub w4: f64,
    pub tau: f64,
}

impl HusimiSigma {
    pub fn new(bog: Bogoliubov, w4: f64, tau: f64) -> Self {
        let e = (-w4 * tau).exp();
        let diag = 1.0 + e * bog.nu.norm_sqr();
        let sigma = Matrix2::new(
            -bog.mu.conj() * bog.nu * e,
            C64::new(diag, 0.0),
            C64::new(diag, 0.0),
            -bog.mu * bog.nu.conj() * e,
        );
        Self { sigma, bog, w4, tau }
    }

    pub fn det(&self) -> C64 {
        self.sigma.determinant()
    }
}

/// `⟨α|ρ^D(τ)|α⟩` for the decaying squeezed state, with `z = (α, α*)`.
///
/// `a_mean` is `⟨a⟩` of the initial squeezed state (at τ = 0); it relaxes as
/// `a_mean · e^{−w4 τ/2}`.
pub fn husimi_dp(bog: Bogoliubov, w4: f64, tau: f64, a_mean: C64, alpha: C64) -> Result<f64> {
    if (bog.unitarity() - 1.0).abs() > 1e-10 {
        return Err(Error::CommutatorViolation { value: bog.unitarity() });
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidParameter { name: "tau", value: tau, reason: "must lie in [0, 1]" });
    }
    let hs = HusimiSigma::new(bog, w4, tau);
    let inv = hs.sigma.try_inverse().ok_or(Error::InvalidState("singular σ"))?;
    let m = a_mean * (-0.5 * w4 * tau).exp();
    let d = nalgebra::Vector2::new(alpha - m, (alpha - m).conj());
    let quad = (d.transpose() * inv * d)[(0, 0)];
    Ok((-0.5 * quad.re).exp() / hs.det().norm().sqrt())
}

/// `Δt ≈ (8ε e^{2w4} / (2e^{w4} − 1))^{1/4} (∂²|ν|/∂t²)^{−1/2}`.
pub fn delta_t_formula(epsilon: f64, w4_star: f64, d2nu: f64) -> Result<f64> {
    for (name, v) in [("epsilon", epsilon), ("w4_star", w4_star), ("d2nu", d2nu)] {
        crate::error::positive(name, v)?;
    }
    let e = w4_star.exp();
    Ok((8.0 * epsilon * e * e / (2.0 * e - 1.0)).powf(0.25) / d2nu.sqrt())
}

/// The deconvolution-picture family used by the window diagnostics: inputs
/// are eigenstates of `C(t*)`, propagated to varying `t`.
#[derive(Debug, Clone)]
pub struct PrivilegedTimeProbe<'a> {
    coeffs: &'a QdeCoefficients,
    t_star: f64,
    strategy: SplitStrategy,
    star: Frame,
}

impl<'a> PrivilegedTimeProbe<'a> {
    pub fn new(coeffs: &'a QdeCoefficients, t_star: f64, strategy: SplitStrategy) -> Result<Self> {
        require_natural_units(coeffs.hbar())?;
        let star = Frame::at(coeffs, t_star, strategy)?;
        Ok(Self { coeffs, t_star, strategy, star })
    }

    pub fn t_star(&self) -> f64 {
        self.t_star
    }

    pub fn w4_star(&self) -> f64 {
        self.star.w.w4
    }

    pub fn b_star(&self) -> GeneralizedLoweringOp {
        self.star.b
    }

    /// `|β⟩_{C(t*)}`.
    pub fn input_state(&self, beta: C64) -> Result<GaussianState> {
        Ok(eigenstate_of(&self.star.c()?, beta))
    }

    /// `A(t*, t) = U_s⁻¹(t*, t) B(t*) U_s(t*, t)`: the operator whose eigenstate
    /// the flowed input is at time `t`.
    pub fn a_operator(&self, t: f64) -> Result<GeneralizedLoweringOp> {
        let s = symplectic_flow(self.coeffs, t, self.t_star, DEFAULT_REL_TOL)?;
        conjugate_by_flow(&self.star.b, &s)
    }

    /// `|ν(t*, t)|`.
    pub fn nu_abs(&self, t: f64) -> Result<f64> {
        Ok(bogoliubov(&self.a_operator(t)?).nu.norm())
    }

    pub fn dp_state(&self, beta: C64, t: f64) -> Result<GaussianState> {
        Frame::at(self.coeffs, t, self.strategy)?.dp_propagate(&self.input_state(beta)?)
    }

    /// `S_W − 1` of the deconvolution-picture state at `t` (independent of β).
    pub fn excess_entropy(&self, t: f64) -> Result<f64> {
        wehrl_excess(&self.dp_state(C64::new(0.0, 0.0), t)?)
    }

    /// `∂²|ν|/∂t²` at t* by central differences with one Richardson step.
    pub fn d2nu(&self, h: f64) -> Result<f64> {
        let t = self.t_star;
        let f0 = self.nu_abs(t)?;
        let second = |h: f64| -> Result<f64> { Ok((self.nu_abs(t + h)? - 2.0 * f0 + self.nu_abs(t - h)?) / (h * h)) };
        let (coarse, fine) = (second(h)?, second(0.5 * h)?);
        Ok((4.0 * fine - coarse) / 3.0)
    }

    /// Bisect each side of t* for the first crossing of `S_W − 1 = ε`, scanning
    /// outward over `[t_min, 2t*]`.
    pub fn scan_window(&self, epsilon: f64) -> Result<Window> {
        crate::error::positive("epsilon", epsilon)?;
        let horizon = (self.coeffs.t_min(), 2.0 * self.t_star);
        let step = self.t_star / 64.0;
        let (t_lo, lo_hit) = self.crossing(epsilon, horizon.0, step)?;
        let (t_hi, hi_hit) = self.crossing(epsilon, horizon.1, step)?;
        Ok(Window { t_star: self.t_star, t_lo, t_hi, lo_at_horizon: lo_hit, hi_at_horizon: hi_hit })
    }

    fn crossing(&self, epsilon: f64, limit: f64, step: f64) -> Result<(f64, bool)> {
        let dir = (limit - self.t_star).signum();
        let mut inside = self.t_star;
        loop {
            let next = inside + dir * step;
            let next = if (next - limit) * dir >= 0.0 { limit } else { next };
            if self.excess_entropy(next)? >= epsilon {
                let mut outside = next;
                for _ in 0..200 {
                    if (outside - inside).abs() <= 1e-13 * self.t_star {
                        break;
                    }
                    let mid = 0.5 * (inside + outside);
                    if self.excess_entropy(mid)? >= epsilon {
                        outside = mid;
                    } else {
                        inside = mid;
                    }
                }
                return Ok((0.5 * (inside + outside), false));
            }
            if next == limit {
                return Ok((limit, true));
            }
            inside = next;
        }
    }

    /// Fit `(S_W − 1)/τ⁴ = C + Dτ + Eτ²` on `0 < |τ| ≤ span`, τ = t − t*,
    /// and compare C with `(1/8) e^{−w4}(2 − e^{−w4}) (∂²|ν|/∂t²)²`.
    pub fn quartic_fit(&self, span: f64, samples_per_side: usize, d2nu_step: f64) -> Result<QuarticFit> {
        let n = samples_per_side.max(3);
        let mut taus = Vec::with_capacity(2 * n);
        for i in 0..n {
            // stay away from τ = 0, where rounding dominates the ratio
            let tau = span * (0.2 + 0.8 * i as f64 / (n - 1) as f64);
            taus.push(tau);
            taus.push(-tau);
        }
        let mut a = DMatrix::zeros(taus.len(), 3);
        let mut y = DVector::zeros(taus.len());
        for (k, &tau) in taus.iter().enumerate() {
            a[(k, 0)] = 1.0;
            a[(k, 1)] = tau;
            a[(k, 2)] = tau * tau;
            y[k] = self.excess_entropy(self.t_star + tau)? / tau.powi(4);
        }
        let sol = a.svd(true, true).solve(&y, 1e-14).map_err(|_| Error::InvalidState("quartic fit failed"))?;
        let d2nu = self.d2nu(d2nu_step)?;
        let x = (-self.w4_star()).exp();
        Ok(QuarticFit { fitted: sol[0], predicted: 0.125 * x * (2.0 - x) * d2nu * d2nu, d2nu })
    }
}

/// Interval around t* on which `S_W − 1 < ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub t_star: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    /// The lower edge is the scan horizon rather than a crossing.
    pub lo_at_horizon: bool,
    pub hi_at_horizon: bool,
}

impl Window {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.t_hi - self.t_lo)
    }

    pub fn hit_horizon(&self) -> bool {
        self.lo_at_horizon || self.hi_at_horizon
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticFit {
    pub fitted: f64,
    pub predicted: f64,
    pub d2nu: f64,
}

impl QuarticFit {
    pub fn relative_error(&self) -> f64 {
        (self.fitted - self.predicted).abs() / self.predicted.abs()
    }
}

/// `∂²|ν|/∂t²` at t* with the default step `1e−3·t*`.
pub fn d2nu(coeffs: &QdeCoefficients, t_star: f64, strategy: SplitStrategy) -> Result<f64> {
    PrivilegedTimeProbe::new(coeffs, t_star, strategy)?.d2nu(1e-3 * t_star)
}

/// The window `[t_lo, t_hi]` around t* on which the deconvolution-picture state
/// from `|β⟩_{C(t*)}` keeps `S_W − 1 < ε`. The entropy does not depend on β,
/// which is accepted for interface symmetry with the other scenario drivers.
pub fn scan_window(
    coeffs: &QdeCoefficients,
    t_star: f64,
    _beta: C64,
    epsilon: f64,
    strategy: SplitStrategy,
) -> Result<Window> {
    PrivilegedTimeProbe::new(coeffs, t_star, strategy)?.scan_window(epsilon)
}
