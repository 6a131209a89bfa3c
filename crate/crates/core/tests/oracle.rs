//! Gaussian shortcuts checked against brute-force Fock integration.

use nalgebra::DMatrix;
use squeezelab::algebra::{Bogoliubov, GeneralizedLoweringOp, SplitStrategy};
use squeezelab::channels::Frame;
use squeezelab::entropy::{husimi_dp, von_neumann_gaussian};
use squeezelab::fockoracle::{
    build_generator, eigen_ket, gaussian_to_fock, integrate_master, ket_fidelity, rk4, wdp_fock,
    FockDensityMatrix, Ladder, OpticalGenerator,
};
use squeezelab::gaussian::{eigenstate_of, GaussianState};
use squeezelab::model::{make_reference_model, make_squeezing_model, Coefficients, QdeCoefficients};
use squeezelab::C64;

fn max_moment_gap(rho: &FockDensityMatrix, s: &GaussianState) -> (f64, f64) {
    let (mean, cov) = rho.moments();
    let [mq, mp] = s.mean();
    let dm = (mean[0] - mq).abs().max((mean[1] - mp).abs());
    let dc = (cov - s.cov()).abs().max();
    (dm, dc)
}

fn reference_run(n: usize) -> (FockDensityMatrix, GaussianState) {
    let coeffs = make_reference_model(1.0, 1.0, 2.0).unwrap();
    let frame = Frame::at(&coeffs, 1.0, SplitStrategy::default()).unwrap();
    let s0 = eigenstate_of(&frame.c().unwrap(), C64::new(1.0, 0.5));
    let rho0 = gaussian_to_fock(&s0, n).unwrap();
    let run = integrate_master(&rho0, &coeffs, 1.0, 1e-3).unwrap();
    assert!(run.ok(), "{:?}", run.diagnostics);
    (run.state, frame.schrodinger_propagate(&s0).unwrap())
}

#[test]
fn reference_model_matches_factorized_propagation() {
    let (rho, s) = reference_run(40);
    let (dm, dc) = max_moment_gap(&rho, &s);
    assert!(dm < 1e-6 && dc < 1e-5, "mean gap {dm:e}, covariance gap {dc:e}");
    assert!((rho.trace() - 1.0).abs() < 1e-8);
    assert!((rho.purity() - s.purity()).abs() < 1e-5);
}

#[test]
fn reference_moments_converge_in_truncation() {
    let (small, _) = reference_run(40);
    let (large, _) = reference_run(80);
    let (m1, c1) = small.moments();
    let (m2, c2) = large.moments();
    let gap = (m1[0] - m2[0]).abs().max((m1[1] - m2[1]).abs()).max((c1 - c2).abs().max());
    assert!(gap < 1e-6, "{gap:e}");
}

#[test]
fn squeezed_decay_reproduces_husimi_closed_form() {
    let (w4, n) = (0.8, 40);
    let bog = Bogoliubov::new(C64::new(1.25, 0.0), C64::from_polar(0.75, 0.6)).unwrap();
    let op = GeneralizedLoweringOp::from_bogoliubov(bog, 1.0).unwrap();
    let beta = C64::new(0.7, -0.4);
    let a_mean = bog.mu.conj() * beta - bog.nu * beta.conj();
    let rho0 = FockDensityMatrix::from_ket(&eigen_ket(&op, beta, n).unwrap(), 1.0).unwrap();
    let decay = OpticalGenerator::new(&Ladder::new(n, 1.0), w4, 0.0);
    let mut rho = rho0.matrix().clone();
    let mut tau = 0.0;
    for target in [0.25, 0.5, 1.0] {
        rho = rk4(&rho, tau, target, 1e-3, |_, r| Ok(decay.apply(r))).unwrap();
        tau = target;
        let state = FockDensityMatrix::new(rho.clone(), 1.0).unwrap();
        for (x, y) in [(0.0, 0.0), (0.5, -0.3), (-1.1, 0.8), (1.5, 1.2), (-0.4, -1.7)] {
            let alpha = C64::new(x, y);
            let expected = husimi_dp(bog, w4, tau, a_mean, alpha).unwrap();
            let got = state.husimi_q(alpha);
            assert!((got - expected).abs() < 1e-5, "tau {tau}, alpha {alpha}: {got} vs {expected}");
        }
    }
}

#[test]
fn deconvolution_picture_ket_is_pure_eigenstate_at_privileged_time() {
    let coeffs = make_squeezing_model(1.0, 0.5, 1.0, 1.0, 2.0).unwrap();
    let beta = C64::new(0.6, 0.3);
    let frame = Frame::at(&coeffs, 1.0, SplitStrategy::default()).unwrap();
    let ket0 = eigen_ket(&frame.c().unwrap(), beta, 40).unwrap();
    let out = wdp_fock(&ket0, &coeffs, 1.0, SplitStrategy::default(), 1e-3).unwrap();
    let target = eigen_ket(&frame.b, beta * (-0.5 * frame.w.w4).exp(), 40).unwrap();
    let f = ket_fidelity(&out, &target);
    assert!(f >= 1.0 - 1e-6, "{}", 1.0 - f);
}

#[test]
fn superposition_through_deconvolution_picture() {
    let coeffs = make_squeezing_model(1.0, 0.5, 1.0, 1.0, 2.0).unwrap();
    let frame = Frame::at(&coeffs, 1.0, SplitStrategy::default()).unwrap();
    let c = frame.c().unwrap();
    let (b1, b2) = (C64::new(0.8, 0.0), C64::new(-0.8, 0.0));
    let sum = eigen_ket(&c, b1, 40).unwrap() + eigen_ket(&c, b2, 40).unwrap();
    let out = wdp_fock(&sum, &coeffs, 1.0, SplitStrategy::default(), 1e-3).unwrap();
    let decay = (-0.5 * frame.w.w4).exp();
    let branch = |b: C64| eigen_ket(&frame.b, b * decay, 40).unwrap();
    let (f1, f2) = (ket_fidelity(&out, &branch(b1)), ket_fidelity(&out, &branch(b2)));
    // The two branches keep equal weight; neither survives alone.
    assert!((f1 - f2).abs() < 1e-8);
    assert!((f1 - SUPERPOSITION_BRANCH_FIDELITY).abs() < 1e-6, "{f1}");
}

const SUPERPOSITION_BRANCH_FIDELITY: f64 = 0.812224479;

#[test]
fn closed_system_conserves_energy() {
    let coeffs = QdeCoefficients::custom(
        |_| Coefficients { b11: 0.7, b12: 0.2, b22: 0.4, k1: 0.0, k2: 0.0, k3: C64::new(0.0, 0.0) },
        1.0,
        1e-3,
    )
    .unwrap();
    let rho0 = gaussian_to_fock(&GaussianState::coherent(C64::new(0.8, 0.3), 1.0), 40).unwrap();
    let ladder = Ladder::new(40, 1.0);
    let h: DMatrix<C64> = &ladder.q * &ladder.q * C64::new(0.7, 0.0)
        + (&ladder.q * &ladder.p + &ladder.p * &ladder.q) * C64::new(0.2, 0.0)
        + &ladder.p * &ladder.p * C64::new(0.4, 0.0);
    let energy = |r: &FockDensityMatrix| (&h * r.matrix()).trace().re;
    let run = integrate_master(&rho0, &coeffs, 2.0, 1e-3).unwrap();
    assert!((energy(&run.state) - energy(&rho0)).abs() < 1e-8);
    assert!((run.state.purity() - 1.0).abs() < 1e-8);
    let g = build_generator(&coeffs, 0.0, 40).unwrap();
    let d = g.apply(rho0.matrix());
    assert!((&h * d).trace().norm() < 1e-8);
}

#[test]
fn thermal_entropy_matches_gaussian_formula() {
    let s = GaussianState::thermal(0.7, 1.0);
    let rho = gaussian_to_fock(&s, 80).unwrap();
    assert!((rho.von_neumann() - von_neumann_gaussian(&s).unwrap()).abs() < 1e-6);
    let (_, cov) = rho.moments();
    assert!((cov - s.cov()).abs().max() < 1e-8);
}
