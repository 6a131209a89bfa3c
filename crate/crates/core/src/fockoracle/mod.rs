//! Brute-force truncated-Fock integration of the master equation
//!
//! ```text
//! dρ/dt = (1/iħ)[H_s, ρ] − k1{q,ρ,q} − k2{p,ρ,p} + k3{p,ρ,q} + k4{q,ρ,p},
//! {A, ρ, B} = B A† ρ + ρ B A† − 2 A† ρ B,
//! ```
//!
//! and of the deconvolution-picture ket propagator. Nothing here relies on
//! Gaussianity; it is the reference the closed-form paths are checked against.
//!
//! Expanding the brackets, the generator is `Kρ + ρK† + q Z₁ + p Z₂` with
//! `K = −iH/ħ + G`, `G = −k1 q² − k2 p² + k3 qp + k4 pq`,
//! `Z₁ = 2k1 ρq − 2k4 ρp` and `Z₂ = 2k2 ρp − 2k3 ρq`. All operators are built
//! from the same truncated ladder matrices, so the truncated generator is
//! exactly trace-free.

mod banded;

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::algebra::{bogoliubov, GeneralizedLoweringOp, SplitStrategy};
use crate::channels::Frame;
use crate::error::{positive, Error, Result};
use crate::gaussian::GaussianState;
use crate::model::{Coefficients, QdeCoefficients};
use banded::Banded;

pub const DEFAULT_DIM: usize = 40;
pub const DEFAULT_DT: f64 = 1e-3;
/// Largest supported truncation.
pub const MAX_DIM: usize = 200;
/// Allowed probability mass outside the truncation when synthesizing states.
pub const TRUNCATION_TOL: f64 = 1e-6;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn check_dim(n: usize) -> Result<()> {
    if !(8..=MAX_DIM).contains(&n) {
        return Err(Error::InvalidParameter { name: "N", value: n as f64, reason: "truncation must lie in [8, 200]" });
    }
    Ok(())
}

/// Truncated `a`, `a†`, `q = √(ħ/2)(a + a†)`, `p = i√(ħ/2)(a† − a)`.
#[derive(Debug, Clone)]
pub struct Ladder {
    pub a: DMatrix<C64>,
    pub ad: DMatrix<C64>,
    pub q: DMatrix<C64>,
    pub p: DMatrix<C64>,
    pub hbar: f64,
}

impl Ladder {
    pub fn new(n: usize, hbar: f64) -> Self {
        let a = DMatrix::from_fn(n, n, |i, j| if j == i + 1 { C64::new((j as f64).sqrt(), 0.0) } else { ZERO });
        let ad = a.adjoint();
        let s = (hbar / 2.0).sqrt();
        let q = (&a + &ad) * C64::new(s, 0.0);
        let p = (&ad - &a) * C64::new(0.0, s);
        Self { a, ad, q, p, hbar }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Banded copies of the linear and quadratic quadrature operators.
#[derive(Debug, Clone)]
struct Quadratics {
    q: Banded,
    p: Banded,
    qq: Banded,
    pp: Banded,
    qp: Banded,
    pq: Banded,
    hbar: f64,
}

impl Quadratics {
    fn new(n: usize, hbar: f64) -> Self {
        let l = Ladder::new(n, hbar);
        Self {
            q: Banded::from_dense(&l.q),
            p: Banded::from_dense(&l.p),
            qq: Banded::from_dense(&(&l.q * &l.q)),
            pp: Banded::from_dense(&(&l.p * &l.p)),
            qp: Banded::from_dense(&(&l.q * &l.p)),
            pq: Banded::from_dense(&(&l.p * &l.q)),
            hbar,
        }
    }

    fn hamiltonian(&self, c: &Coefficients) -> Banded {
        let r = |x: f64| C64::new(x, 0.0);
        Banded::combine(&[(r(c.b11), &self.qq), (r(c.b12), &self.qp), (r(c.b12), &self.pq), (r(c.b22), &self.pp)])
    }

    fn generator(&self, c: Coefficients) -> Generator {
        let r = |x: f64| C64::new(x, 0.0);
        let k4 = c.k3.conj();
        let ih = C64::new(0.0, 1.0 / self.hbar);
        let g = [(r(-c.k1), &self.qq), (r(-c.k2), &self.pp), (c.k3, &self.qp), (k4, &self.pq)];
        let h = [(c.b11, &self.qq), (c.b12, &self.qp), (c.b12, &self.pq), (c.b22, &self.pp)];
        let with_h = |sign: f64| {
            let mut terms: Vec<(C64, &Banded)> = g.to_vec();
            terms.extend(h.iter().map(|&(b, m)| (ih * (sign * b), m)));
            Banded::combine(&terms)
        };
        Generator { k: with_h(-1.0), kp: with_h(1.0), q: self.q.clone(), p: self.p.clone(), c }
    }
}

/// The master-equation right-hand side at one instant.
#[derive(Debug, Clone)]
pub struct Generator {
    k: Banded,
    kp: Banded,
    q: Banded,
    p: Banded,
    c: Coefficients,
}

impl Generator {
    /// `dρ/dt` for the given ρ.
    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let x = self.q.right_mul(rho);
        let y = self.p.right_mul(rho);
        let k4 = self.c.k3.conj();
        let z1 = &x * C64::new(2.0 * self.c.k1, 0.0) - &y * (2.0 * k4);
        let z2 = &y * C64::new(2.0 * self.c.k2, 0.0) - &x * (2.0 * self.c.k3);
        let mut out = self.k.left_mul(rho);
        out += self.kp.right_mul(rho);
        out += self.q.left_mul(&z1);
        out += self.p.left_mul(&z2);
        out
    }

    pub fn coefficients(&self) -> Coefficients {
        self.c
    }
}

pub fn build_generator(coeffs: &QdeCoefficients, t: f64, n: usize) -> Result<Generator> {
    check_dim(n)?;
    Ok(Quadratics::new(n, coeffs.hbar()).generator(coeffs.sample(t)?))
}

/// `{A, ρ, B} = B A† ρ + ρ B A† − 2 A† ρ B`.
pub fn bracket(a: &DMatrix<C64>, rho: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let ad = a.adjoint();
    let bad = b * &ad;
    &bad * rho + rho * &bad - (&ad * rho * b) * C64::new(2.0, 0.0)
}

/// `dρ/dt = −(γ/2)[(n̄ + 1){a†,ρ,a†} + n̄{a,ρ,a}]`, built from ladder operators.
#[derive(Debug, Clone)]
pub struct OpticalGenerator {
    a: Banded,
    ad: Banded,
    ada: Banded,
    aad: Banded,
    gamma: f64,
    nbar: f64,
}

impl OpticalGenerator {
    pub fn new(ladder: &Ladder, gamma: f64, nbar: f64) -> Self {
        Self {
            a: Banded::from_dense(&ladder.a),
            ad: Banded::from_dense(&ladder.ad),
            ada: Banded::from_dense(&(&ladder.ad * &ladder.a)),
            aad: Banded::from_dense(&(&ladder.a * &ladder.ad)),
            gamma,
            nbar,
        }
    }

    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let two = C64::new(2.0, 0.0);
        // {a†,ρ,a†} = a†aρ + ρa†a − 2aρa†, {a,ρ,a} = aa†ρ + ρaa† − 2a†ρa
        let emit = self.ada.left_mul(rho) + self.ada.right_mul(rho) - self.a.left_mul(&self.ad.right_mul(rho)) * two;
        let absorb = self.aad.left_mul(rho) + self.aad.right_mul(rho) - self.ad.left_mul(&self.a.right_mul(rho)) * two;
        (emit * C64::new(self.nbar + 1.0, 0.0) + absorb * C64::new(self.nbar, 0.0)) * C64::new(-self.gamma / 2.0, 0.0)
    }
}

/// Classical fixed-step RK4 from `t0` to `t1`; the step is shrunk so the
/// interval is covered by whole steps.
pub fn rk4<F>(rho0: &DMatrix<C64>, t0: f64, t1: f64, dt: f64, mut f: F) -> Result<DMatrix<C64>>
where
    F: FnMut(f64, &DMatrix<C64>) -> Result<DMatrix<C64>>,
{
    positive("dt", dt)?;
    let span = t1 - t0;
    let steps = (span.abs() / dt).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let mut rho = rho0.clone();
    let c = |x: f64| C64::new(x, 0.0);
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        let k1 = f(t, &rho)?;
        let k2 = f(t + 0.5 * h, &(&rho + &k1 * c(0.5 * h)))?;
        let k3 = f(t + 0.5 * h, &(&rho + &k2 * c(0.5 * h)))?;
        let k4 = f(t + h, &(&rho + &k3 * c(h)))?;
        rho += (k1 + (k2 + k3) * c(2.0) + k4) * c(h / 6.0);
    }
    Ok(rho)
}

/// A truncated density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    rho: DMatrix<C64>,
    hbar: f64,
}

/// Invariant monitors for a density operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl Diagnostics {
    pub fn ok(&self) -> bool {
        self.trace_error <= 1e-8 && self.hermiticity_error <= 1e-10 && self.min_eigenvalue >= -1e-6
    }
}

impl FockDensityMatrix {
    /// Validates Hermiticity, unit trace and (approximate) positivity.
    pub fn new(rho: DMatrix<C64>, hbar: f64) -> Result<Self> {
        positive("hbar", hbar)?;
        if !rho.is_square() {
            return Err(Error::InvalidState("density matrix must be square"));
        }
        check_dim(rho.nrows())?;
        let s = Self { rho, hbar };
        let d = s.diagnostics();
        if !d.ok() {
            return Err(Error::InvalidState("density matrix violates Hermiticity, trace or positivity"));
        }
        Ok(s)
    }

    pub fn from_ket(ket: &DVector<C64>, hbar: f64) -> Result<Self> {
        let norm = ket.norm();
        if norm < 1e-150 {
            return Err(Error::NormUnderflow);
        }
        let k = ket / C64::new(norm, 0.0);
        Self::new(&k * k.adjoint(), hbar)
    }

    pub fn vacuum(n: usize, hbar: f64) -> Result<Self> {
        let mut ket = DVector::zeros(n);
        ket[0] = C64::new(1.0, 0.0);
        Self::from_ket(&ket, hbar)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn diagnostics(&self) -> Diagnostics {
        let herm = (&self.rho - self.rho.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        Diagnostics {
            trace_error: (self.rho.trace() - C64::new(1.0, 0.0)).norm(),
            hermiticity_error: herm,
            min_eigenvalue: self.eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    fn hermitian_part(&self) -> DMatrix<C64> {
        (&self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        SymmetricEigen::new(self.hermitian_part()).eigenvalues.iter().cloned().collect()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `−Tr ρ ln ρ`, ignoring non-positive eigenvalues.
    pub fn von_neumann(&self) -> f64 {
        self.eigenvalues().iter().filter(|&&l| l > 0.0).map(|&l| -l * l.ln()).sum()
    }

    /// `⟨q⟩, ⟨p⟩` and the symmetrized covariance, from `⟨a⟩`, `⟨a²⟩`, `⟨a†a⟩`.
    pub fn moments(&self) -> ([f64; 2], Matrix2<f64>) {
        let l = Ladder::new(self.dim(), self.hbar);
        let a = (&l.a * &self.rho).trace();
        let a2 = (&l.a * &l.a * &self.rho).trace();
        let n = (&l.ad * &l.a * &self.rho).trace().re;
        let h = self.hbar;
        let s = (2.0 * h).sqrt();
        let mean = [s * a.re, s * a.im];
        let qq = 0.5 * h * (2.0 * a2.re + 2.0 * n + 1.0);
        let pp = 0.5 * h * (-2.0 * a2.re + 2.0 * n + 1.0);
        let qp = h * a2.im;
        let cov = Matrix2::new(qq - mean[0] * mean[0], qp - mean[0] * mean[1], qp - mean[0] * mean[1], pp - mean[1] * mean[1]);
        (mean, cov)
    }

    /// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
    pub fn fidelity(&self, other: &FockDensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidParameter { name: "N", value: other.dim() as f64, reason: "dimension mismatch" });
        }
        let e = SymmetricEigen::new(self.hermitian_part());
        let roots = DMatrix::from_diagonal(&e.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0)));
        let sqrt_rho = &e.eigenvectors * roots * e.eigenvectors.adjoint();
        let m = &sqrt_rho * other.hermitian_part() * &sqrt_rho;
        let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let s: f64 = SymmetricEigen::new(m).eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
        Ok(s * s)
    }

    /// `⟨α|ρ|α⟩` (natural units).
    pub fn husimi_q(&self, alpha: C64) -> f64 {
        let c = coherent_ket(alpha, self.dim());
        (c.adjoint() * &self.rho * &c)[(0, 0)].re
    }
}

/// Result of a master-equation integration, with its invariant monitors.
#[derive(Debug, Clone)]
pub struct MasterRun {
    pub state: FockDensityMatrix,
    pub diagnostics: Diagnostics,
    pub steps: usize,
}

impl MasterRun {
    pub fn ok(&self) -> bool {
        self.diagnostics.ok()
    }
}

/// Fixed-step RK4 integration of the master equation from 0 to `t_end`. An
/// invariant breach is reported through [`MasterRun::diagnostics`], not hidden.
pub fn integrate_master(rho0: &FockDensityMatrix, coeffs: &QdeCoefficients, t_end: f64, dt: f64) -> Result<MasterRun> {
    integrate_master_from(rho0, coeffs, 0.0, t_end, dt)
}

pub fn integrate_master_from(
    rho0: &FockDensityMatrix,
    coeffs: &QdeCoefficients,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<MasterRun> {
    if (rho0.hbar - coeffs.hbar()).abs() > 1e-12 {
        return Err(Error::HbarMismatch(rho0.hbar, coeffs.hbar()));
    }
    let quads = Quadratics::new(rho0.dim(), rho0.hbar);
    let rho = rk4(&rho0.rho, t0, t1, dt, |t, r| Ok(quads.generator(coeffs.sample(t)?).apply(r)))?;
    if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite { t: t1 });
    }
    let state = FockDensityMatrix { rho, hbar: rho0.hbar };
    let diagnostics = state.diagnostics();
    let steps = ((t1 - t0).abs() / dt).ceil().max(1.0) as usize;
    Ok(MasterRun { state, diagnostics, steps })
}

/// Coherent-state coefficients `e^{−|α|²/2} αⁿ/√n!`, truncated (not renormalized).
pub fn coherent_ket(alpha: C64, n: usize) -> DVector<C64> {
    let mut v = DVector::zeros(n);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for k in 0..n {
        v[k] = c;
        c = c * alpha / ((k + 1) as f64).sqrt();
    }
    v
}

/// Fock coefficients of `|β⟩_op` from `μ√(n+1) c_{n+1} = β c_n − ν√n c_{n−1}`,
/// normalized on `dim` levels.
fn eigen_ket_raw(op: &GeneralizedLoweringOp, beta: C64, dim: usize) -> DVector<C64> {
    let b = bogoliubov(op);
    let mut v = DVector::zeros(dim);
    v[0] = C64::new(1.0, 0.0);
    if dim > 1 {
        v[1] = beta * v[0] / b.mu;
    }
    for n in 1..dim - 1 {
        v[n + 1] = (beta * v[n] - b.nu * (n as f64).sqrt() * v[n - 1]) / (b.mu * ((n + 1) as f64).sqrt());
    }
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

fn padded(n: usize) -> usize {
    4 * n + 64
}

/// The squeezed ket `|β⟩_op` on `n` levels; errors if more than
/// [`TRUNCATION_TOL`] of its probability lies above the truncation.
pub fn eigen_ket(op: &GeneralizedLoweringOp, beta: C64, n: usize) -> Result<DVector<C64>> {
    check_dim(n)?;
    let full = eigen_ket_raw(op, beta, padded(n));
    let kept = full.rows(0, n).into_owned();
    let deficit = 1.0 - kept.norm_squared();
    if deficit > TRUNCATION_TOL {
        return Err(Error::TruncationDeficit { deficit });
    }
    let norm = kept.norm();
    Ok(kept / C64::new(norm, 0.0))
}

/// Fock image of a Gaussian state. Pure states come from the squeezed-ket
/// recursion; mixed ones are thermal states of the mode whose vacuum has the
/// covariance `Σ/κ`, `κ = 2√det Σ/ħ`, displaced to the state's mean.
pub fn gaussian_to_fock(s: &GaussianState, n: usize) -> Result<FockDensityMatrix> {
    check_dim(n)?;
    let h = s.hbar();
    let kappa = 2.0 * s.det().sqrt() / h;
    if kappa <= 1.0 + 1e-12 {
        let op = s.annihilator()?;
        return FockDensityMatrix::from_ket(&eigen_ket(&op, s.amplitude(&op), n)?, h);
    }
    let [mq, mp] = s.mean();
    let c = s.cov() / kappa;
    let pure = GaussianState::from_moments(mq, mp, c[(0, 0)], c[(0, 1)], c[(1, 1)], h)?;
    let op = pure.annihilator()?;
    let beta = pure.amplitude(&op);
    let nbar = 0.5 * (kappa - 1.0);

    let m = padded(n);
    let bog = bogoliubov(&op);
    let ladder = Ladder::new(m, h);
    // B† − β*
    let raise = Banded::from_dense(&(&ladder.ad * bog.mu.conj() + &ladder.a * bog.nu.conj() - DMatrix::identity(m, m) * beta.conj()));
    let mut ket: Vec<C64> = eigen_ket_raw(&op, beta, m).iter().cloned().collect();
    let mut rho = DMatrix::zeros(n, n);
    let mut weight = 1.0 / (nbar + 1.0);
    let ratio = nbar / (nbar + 1.0);
    let mut used = 0.0;
    let mut k = 0usize;
    while 1.0 - used > 1e-15 && k < m / 2 {
        let head = DVector::from_iterator(n, ket.iter().take(n).cloned());
        rho += &head * head.adjoint() * C64::new(weight, 0.0);
        used += weight;
        k += 1;
        ket = raise.mul_vec(&ket).into_iter().map(|z| z / (k as f64).sqrt()).collect();
        weight *= ratio;
    }
    let trace = rho.trace().re;
    let deficit = 1.0 - trace;
    if deficit > TRUNCATION_TOL {
        return Err(Error::TruncationDeficit { deficit });
    }
    FockDensityMatrix::new(rho / C64::new(trace, 0.0), h)
}

/// `|⟨ψ|φ⟩|²` for normalized kets.
pub fn ket_fidelity(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    a.dotc(b).norm_sqr() / (a.norm_squared() * b.norm_squared())
}

/// `U_s(t1, t0)|ψ⟩` by RK4 on `d|ψ⟩/dt = −(i/ħ) H_s(t)|ψ⟩`.
pub fn unitary_ket(ket0: &DVector<C64>, coeffs: &QdeCoefficients, t0: f64, t1: f64, dt: f64) -> Result<DVector<C64>> {
    let quads = Quadratics::new(ket0.len(), coeffs.hbar());
    let factor = C64::new(0.0, -1.0 / coeffs.hbar());
    let as_col = DMatrix::from_column_slice(ket0.len(), 1, ket0.as_slice());
    let out = rk4(&as_col, t0, t1, dt, |t, v| {
        let hv = quads.hamiltonian(&coeffs.sample(t)?).mul_vec(v.as_slice());
        Ok(DMatrix::from_iterator(v.nrows(), 1, hv.into_iter().map(|z| z * factor)))
    })?;
    Ok(DVector::from_column_slice(out.as_slice()))
}

/// `exp(−(w4/2) B†B) U_s(t)|φ(0)⟩`, normalized, with B = B(t) for the chosen split.
pub fn wdp_fock(
    ket0: &DVector<C64>,
    coeffs: &QdeCoefficients,
    t: f64,
    strategy: SplitStrategy,
    dt: f64,
) -> Result<DVector<C64>> {
    check_dim(ket0.len())?;
    let frame = Frame::at(coeffs, t, strategy)?;
    let evolved = unitary_ket(ket0, coeffs, 0.0, t, dt)?;
    damp_ket(&evolved, &frame.b, frame.w.w4)
}

/// `exp(−(w4/2) B†B)|ψ⟩`, normalized.
pub fn damp_ket(ket: &DVector<C64>, op: &GeneralizedLoweringOp, w4: f64) -> Result<DVector<C64>> {
    let ladder = Ladder::new(ket.len(), op.hbar());
    let b = &ladder.q * op.u() + &ladder.p * op.v();
    let bdb = b.adjoint() * &b;
    let e = SymmetricEigen::new((&bdb + bdb.adjoint()) * C64::new(0.5, 0.0));
    let decay = e.eigenvalues.map(|l| C64::new((-0.5 * w4 * l).exp(), 0.0));
    let coeffs = e.eigenvectors.adjoint() * ket;
    let out = &e.eigenvectors * coeffs.component_mul(&decay);
    let norm = out.norm();
    if !(norm > 1e-300) {
        return Err(Error::NormUnderflow);
    }
    Ok(out / C64::new(norm, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_optical_model, make_reference_model};

    fn random_hermitian(n: usize, seed: u64) -> DMatrix<C64> {
        let mut x = seed;
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let m = DMatrix::from_fn(n, n, |_, _| C64::new(next(), next()));
        (&m + m.adjoint()) * C64::new(0.5, 0.0)
    }

    #[test]
    fn generator_is_trace_free_and_hermiticity_preserving() {
        let m = make_reference_model(1.0, 1.0, 2.0).unwrap();
        let g = build_generator(&m, 0.7, 12).unwrap();
        let rho = random_hermitian(12, 3);
        let d = g.apply(&rho);
        assert!(d.trace().norm() < 1e-12);
        assert!((&d - d.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn optical_mapping_matches_ladder_form() {
        let (gamma, nbar) = (0.8, 0.6);
        let m = make_optical_model(gamma, nbar).unwrap();
        let g = build_generator(&m, 0.0, 10).unwrap();
        let l = Ladder::new(10, 1.0);
        let rho = random_hermitian(10, 11);
        assert!((g.apply(&rho) - OpticalGenerator::new(&l, gamma, nbar).apply(&rho)).norm() < 1e-12);
        let dense = (bracket(&l.ad, &rho, &l.ad) * C64::new(nbar + 1.0, 0.0) + bracket(&l.a, &rho, &l.a) * C64::new(nbar, 0.0))
            * C64::new(-gamma / 2.0, 0.0);
        assert!((dense - g.apply(&rho)).norm() < 1e-12);
    }

    #[test]
    fn vacuum_moments() {
        let v = FockDensityMatrix::vacuum(10, 1.0).unwrap();
        let (mean, cov) = v.moments();
        assert_eq!(mean, [0.0, 0.0]);
        assert!((cov - Matrix2::identity() * 0.5).norm() < 1e-15);
        assert!((v.purity() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coherent_state_statistics() {
        let alpha = C64::new(1.0, 0.0);
        let k = coherent_ket(alpha, 40);
        let mut fact = 1.0;
        for n in 0..10 {
            if n > 0 {
                fact *= n as f64;
            }
            assert!((k[n].norm_sqr() - (-1.0f64).exp() / fact).abs() < 1e-15);
        }
        let rho = gaussian_to_fock(&GaussianState::coherent(alpha, 1.0), 40).unwrap();
        let (mean, _) = rho.moments();
        assert!((mean[0] - 2f64.sqrt()).abs() < 1e-12 && mean[1].abs() < 1e-12);
    }

    #[test]
    fn squeezed_vacuum_has_even_support() {
        let r: f64 = 0.3f64.asinh();
        let b = crate::algebra::Bogoliubov::new(C64::new(r.cosh(), 0.0), C64::new(r.sinh(), 0.0)).unwrap();
        let op = GeneralizedLoweringOp::from_bogoliubov(b, 1.0).unwrap();
        let k = eigen_ket(&op, C64::new(0.0, 0.0), 40).unwrap();
        for n in (1..40).step_by(2) {
            assert!(k[n].norm() < 1e-15);
        }
        assert!(k[2].norm() > 1e-3);
    }

    #[test]
    fn mixed_gaussian_round_trip() {
        let s = GaussianState::from_moments(0.4, -0.3, 0.9, 0.2, 0.7, 1.0).unwrap();
        let rho = gaussian_to_fock(&s, 40).unwrap();
        let (mean, cov) = rho.moments();
        assert!((mean[0] - 0.4).abs() < 1e-8 && (mean[1] + 0.3).abs() < 1e-8);
        assert!((cov - s.cov()).norm() < 1e-8);
        assert!((rho.purity() - s.purity()).abs() < 1e-8);
    }

    #[test]
    fn truncation_deficit_reported() {
        let s = GaussianState::coherent(C64::new(6.0, 0.0), 1.0);
        assert!(matches!(gaussian_to_fock(&s, 10), Err(Error::TruncationDeficit { .. })));
    }

    #[test]
    fn optical_decay_of_coherent_state() {
        let m = make_optical_model(1.0, 0.0).unwrap();
        let rho0 = gaussian_to_fock(&GaussianState::coherent(C64::new(1.0, 0.0), 1.0), 30).unwrap();
        let run = integrate_master(&rho0, &m, 1.0, 1e-3).unwrap();
        assert!(run.ok());
        assert!((run.state.purity() - 1.0).abs() < 1e-5);
        let (mean, _) = run.state.moments();
        assert!((mean[0] / 2f64.sqrt() - (-0.5f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn damping_with_zero_w4_is_identity() {
        let k = coherent_ket(C64::new(0.5, 0.2), 20);
        let k = &k / C64::new(k.norm(), 0.0);
        let out = damp_ket(&k, &GeneralizedLoweringOp::standard(1.0), 0.0).unwrap();
        assert!((ket_fidelity(&k, &out) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fidelity_of_identical_states() {
        let rho = gaussian_to_fock(&GaussianState::thermal(0.3, 1.0), 30).unwrap();
        assert!((rho.fidelity(&rho).unwrap() - 1.0).abs() < 1e-10);
    }
}
