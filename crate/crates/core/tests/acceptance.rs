//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::f64::consts::{FRAC_PI_4, LN_2, TAU};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use squeezelab::algebra::{bogoliubov, conjugate_by_flow, lowering_b, split_r, Bogoliubov, GeneralizedLoweringOp, RSplit, SplitStrategy};
use squeezelab::channels::{b_decay, impurity_filter, symplectic_flow, FilterDirection, Frame};
use squeezelab::entropy::{
    delta_t_formula, von_neumann_gaussian, wehrl_dp_closed_form, wehrl_excess, wehrl_gaussian, wehrl_numeric, GridSpec,
    PrivilegedTimeProbe,
};
use squeezelab::fockoracle::{gaussian_to_fock, integrate_master};
use squeezelab::gaussian::{eigenstate_of, GaussianState};
use squeezelab::model::{check_point, make_reference_model, make_squeezing_model, QdeCoefficients};
use squeezelab::qubit::{cnot_apply, gate, not_circuit, qubit_decode, qubit_encode, receive, CnotGridSpec, Gate};
use squeezelab::wsolve::{w_at, DEFAULT_REL_TOL};
use squeezelab::C64;

type Outcome = Result<String, String>;

const STRATEGIES: [SplitStrategy; 3] = [SplitStrategy::QFilter, SplitStrategy::PFilter, SplitStrategy::ExampleSymmetric];

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("runtime {:.1?} exceeds {:?}", elapsed, limit))
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn squeezing_model() -> QdeCoefficients {
    make_squeezing_model(1.0, 0.5, 1.0, 1.0, 2.0).unwrap()
}

fn commutator_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut accepted = 0;
    while accepted < 200 {
        let (omega, g, c) = (rng.random_range(0.5..2.0), rng.random_range(0.2..2.0), rng.random_range(1.2..4.0));
        let coeffs = if accepted % 2 == 0 {
            make_reference_model(omega, g, c)
        } else {
            make_squeezing_model(omega, rng.random_range(0.0..1.0), rng.random_range(0.5..2.0), g, c)
        }
        .map_err(err)?;
        let t = rng.random_range(coeffs.t_min()..3.0);
        let w = w_at(&coeffs, t).map_err(err)?;
        if !check_point(t, &w, coeffs.hbar()).passes() {
            continue;
        }
        let flow = symplectic_flow(&coeffs, 0.0, t, DEFAULT_REL_TOL).map_err(err)?;
        for strategy in STRATEGIES {
            let split = split_r(&w, coeffs.hbar(), strategy).map_err(err)?;
            let b = lowering_b(&w, &split, coeffs.hbar()).map_err(err)?;
            let c = conjugate_by_flow(&b, &flow).map_err(err)?;
            worst = worst.max((b.commutator() - 1.0).abs()).max((c.commutator() - 1.0).abs());
        }
        accepted += 1;
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    check(worst <= 1e-10, format!("max |[B,B†] − 1| = {worst:.2e} over 200 points × 3 splits"))
}

fn factorization_vs_oracle() -> Outcome {
    let start = Instant::now();
    let coeffs = make_reference_model(1.0, 1.0, 2.0).map_err(err)?;
    let frame = Frame::at(&coeffs, 1.0, SplitStrategy::default()).map_err(err)?;
    let s0 = eigenstate_of(&frame.c().map_err(err)?, C64::new(1.0, 0.5));
    let gaussian = frame.schrodinger_propagate(&s0).map_err(err)?;
    let run = integrate_master(&gaussian_to_fock(&s0, 40).map_err(err)?, &coeffs, 1.0, 1e-3).map_err(err)?;
    let (mean, cov) = run.state.moments();
    let [mq, mp] = gaussian.mean();
    let dm = (mean[0] - mq).abs().max((mean[1] - mp).abs());
    let dc = (cov - gaussian.cov()).abs().max();
    let dtr = (run.state.trace() - 1.0).abs();
    within(start.elapsed(), Duration::from_secs(120))?;
    check(
        dm <= 1e-6 && dc <= 1e-5 && dtr <= 1e-8 && run.ok(),
        format!("mean gap {dm:.2e}, covariance gap {dc:.2e}, trace error {dtr:.2e}"),
    )
}

fn privileged_time_purity() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, coeffs) in [("reference", make_reference_model(1.0, 1.0, 2.0).map_err(err)?), ("squeezing", squeezing_model())] {
        let beta = C64::new(0.8, -0.6);
        let frame = Frame::at(&coeffs, 1.0, SplitStrategy::default()).map_err(err)?;
        let out = frame.dp_propagate(&eigenstate_of(&frame.c().map_err(err)?, beta)).map_err(err)?;
        let amp = out.amplitude(&frame.b);
        let expected = beta * (-0.5 * frame.w.w4).exp();
        let dp = (out.purity() - 1.0).abs();
        let da = (amp - expected).norm();
        let dw = (frame.w.w4 - 1.0).abs();
        let ratio = amp.norm() / beta.norm() - (-0.5f64).exp();
        ok &= dp <= 1e-9 && da <= 1e-9 && dw <= 1e-9 && ratio.abs() <= 1e-9;
        lines.push(format!("{name}: |purity−1| {dp:.1e}, amplitude error {da:.1e}, |amp|/|β| − e^(−1/2) {ratio:.1e}"));
    }
    check(ok, lines.join("; "))
}

fn coherent_output() -> Outcome {
    let coeffs = squeezing_model();
    let beta = C64::new(0.9, 0.4);
    let frame = Frame::at(&coeffs, 1.0, SplitStrategy::ExampleSymmetric).map_err(err)?;
    let out = frame.dp_propagate(&eigenstate_of(&frame.c().map_err(err)?, beta)).map_err(err)?;
    let a = GeneralizedLoweringOp::standard(1.0);
    let got = out.amplitude(&a);
    let expected = beta * C64::new(-0.5 * frame.w.w4, FRAC_PI_4).exp();
    let coherent = (out.cov() - Matrix2::identity() * 0.5).abs().max();
    let rotation = (got / beta).arg();
    check(
        (got - expected).norm() <= 1e-9 && coherent <= 1e-9 && (rotation - FRAC_PI_4).abs() <= 1e-9,
        format!(
            "amplitude error {:.1e}, |Σ − I/2| {coherent:.1e}, mean rotation − π/4 = {:.1e}",
            (got - expected).norm(),
            rotation - FRAC_PI_4
        ),
    )
}

fn entropy_anchors() -> Outcome {
    let grid = GridSpec::default();
    let coherent = wehrl_numeric(&GaussianState::coherent(C64::new(0.7, -0.2), 1.0), grid).map_err(err)?;
    let squeezed = wehrl_dp_closed_form(1.0, 0.0);
    let anchor = 1.0 + 0.5 * LN_2;
    let mut worst: f64 = 0.0;
    for nu in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let bog = Bogoliubov::new(C64::new((1.0f64 + nu * nu).sqrt(), 0.0), C64::from_polar(nu, 0.4)).map_err(err)?;
        let op = GeneralizedLoweringOp::from_bogoliubov(bog, 1.0).map_err(err)?;
        let s = eigenstate_of(&op, C64::new(0.5, 0.3));
        for w4 in [0.0, 0.25, 0.5, 1.0, 2.0] {
            let dp = b_decay(&s, &GeneralizedLoweringOp::standard(1.0), 0.5 * w4).map_err(err)?;
            let numeric = wehrl_numeric(&dp, grid).map_err(err)?;
            worst = worst.max((numeric - wehrl_dp_closed_form(nu, w4)).abs());
        }
    }
    let squeezed_numeric = {
        let bog = Bogoliubov::new(C64::new(2f64.sqrt(), 0.0), C64::new(1.0, 0.0)).map_err(err)?;
        wehrl_numeric(&eigenstate_of(&GeneralizedLoweringOp::from_bogoliubov(bog, 1.0).map_err(err)?, C64::new(0.0, 0.0)), grid)
            .map_err(err)?
    };
    let ok = (coherent - 1.0).abs() <= 1e-6
        && (squeezed - anchor).abs() <= 1e-6
        && (squeezed_numeric - anchor).abs() <= 1e-6
        && worst <= 1e-6;
    check(
        ok,
        format!(
            "coherent S_W − 1 = {:.1e}; |ν|=1 closed form − (1+ln√2) = {:.1e}, quadrature {:.1e}; 5×5 grid max gap {worst:.1e}",
            coherent - 1.0,
            squeezed - anchor,
            squeezed_numeric - anchor
        ),
    )
}

fn random_state(rng: &mut ChaCha8Rng) -> GaussianState {
    let r: f64 = rng.random_range(-1.2..1.2);
    let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let nbar: f64 = if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..2.0) };
    let (c, s) = (theta.cos(), theta.sin());
    let rot = Matrix2::new(c, -s, s, c);
    let diag = Matrix2::new((2.0 * r).exp(), 0.0, 0.0, (-2.0 * r).exp()) * (0.5 * (2.0 * nbar + 1.0));
    let cov = rot * diag * rot.transpose();
    GaussianState::new([rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)], cov, 1.0).unwrap()
}

fn entropy_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut lieb, mut gap) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..100 {
        let s = random_state(&mut rng);
        let sw = wehrl_gaussian(&s).map_err(err)?;
        lieb = lieb.min(wehrl_excess(&s).map_err(err)?);
        gap = gap.min(sw - von_neumann_gaussian(&s).map_err(err)?);
    }
    check(lieb >= 0.0 && gap > 0.0, format!("min(S_W − 1) = {lieb:.3e}, min(S_W − S) = {gap:.4}"))
}

fn quartic_window() -> Outcome {
    let coeffs = squeezing_model();
    let probe = PrivilegedTimeProbe::new(&coeffs, 1.0, SplitStrategy::ExampleSymmetric).map_err(err)?;
    let fit = probe.quartic_fit(0.02, 8, 1e-3).map_err(err)?;
    let mut ok = fit.relative_error() <= 0.10;
    let mut lines = vec![format!(
        "quartic coefficient fitted {:.8} vs predicted {:.8} (rel {:.1e})",
        fit.fitted,
        fit.predicted,
        fit.relative_error()
    )];
    for eps in [1e-2, 1e-3, 1e-4] {
        let formula = delta_t_formula(eps, probe.w4_star(), fit.d2nu).map_err(err)?;
        let w = probe.scan_window(eps).map_err(err)?;
        let rel = |x: f64| (x - formula).abs() / formula;
        let mut parts = vec![format!("half-width {:.4} ({:.1}%)", w.half_width(), 100.0 * rel(w.half_width()))];
        ok &= rel(w.half_width()) <= 0.25;
        for (label, edge, horizon) in [("lo", w.t_lo, w.lo_at_horizon), ("hi", w.t_hi, w.hi_at_horizon)] {
            let d = (edge - w.t_star).abs();
            if horizon {
                parts.push(format!("{label} at horizon"));
            } else {
                ok &= rel(d) <= 0.25;
                parts.push(format!("{label} {d:.4} ({:.1}%)", 100.0 * rel(d)));
            }
        }
        lines.push(format!("ε={eps:.0e}: formula {formula:.4}, {}", parts.join(", ")));
    }
    check(ok, lines.join("; "))
}

fn filter_threshold() -> Outcome {
    let hbar = 1.0;
    let p2: f64 = 0.8;
    let state = GaussianState::from_moments(0.3, -0.2, hbar * hbar / (4.0 * p2), 0.0, p2, hbar).map_err(err)?;
    let w4: f64 = 0.3;
    let exists = |delta: f64| -> Result<bool, String> {
        let split = RSplit::manual(0.0, delta * w4.exp()).map_err(err)?;
        Ok(impurity_filter(&state, &split, w4, hbar, FilterDirection::Deconvolve).exists)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    if !exists(lo)? || exists(hi)? {
        return Err("exists flag does not bracket a flip in [0, 1]".into());
    }
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if exists(mid)? {
            lo = mid
        } else {
            hi = mid
        }
    }
    let threshold = 1.0 / (8.0 * p2);
    let flip_error = (0.5 * (lo + hi) - threshold).abs();
    let split = RSplit::manual(0.0, 0.5 * threshold * w4.exp()).map_err(err)?;
    let witness = impurity_filter(&state, &split, w4, hbar, FilterDirection::Deconvolve);
    let cov = witness.cov;
    check(
        flip_error <= 1e-9 && state.is_pure(1e-12) && witness.exists && !witness.physical,
        format!(
            "flip at δ={:.12} vs 1/(8⟨p²⟩)={threshold:.12}; non-CP witness: pure input ⟨p²⟩={p2}, δ={:.5} → Σ=[[{:.6},{:.6}],[{:.6},{:.6}]], det={:.6} < ħ²/4",
            0.5 * (lo + hi),
            0.5 * threshold,
            cov[(0, 0)],
            cov[(0, 1)],
            cov[(1, 0)],
            cov[(1, 1)],
            witness.det()
        ),
    )
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn qubit_layer() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;

    let mut round_trip: f64 = 0.0;
    for (theta, phi) in [(0.3, -1.2), (-2.0, 0.7), (1.5, 3.0), (0.0, 0.0)] {
        let s = qubit_encode(theta, phi, 0.8, 0.625, 0.0, 1.0).map_err(err)?;
        let d = qubit_decode(&s).map_err(err)?;
        round_trip = round_trip.max((d.theta - theta).abs()).max(angle_gap(d.phi, phi));
    }
    ok &= round_trip <= 1e-12;
    lines.push(format!("round trip {round_trip:.1e}"));

    let s = qubit_encode(0.4, -0.9, 0.8, 0.625, 0.0, 1.0).map_err(err)?;
    let xx = gate(&gate(&s, Gate::X).map_err(err)?, Gate::X).map_err(err)?;
    let zx = qubit_decode(&gate(&gate(&s, Gate::X).map_err(err)?, Gate::Z).map_err(err)?).map_err(err)?;
    let y = qubit_decode(&gate(&s, Gate::Y).map_err(err)?).map_err(err)?;
    let dxx = (xx.cov() - s.cov()).abs().max().max((xx.mean()[0] - s.mean()[0]).abs()).max((xx.mean()[1] - s.mean()[1]).abs());
    let dzy = (zx.theta - y.theta).abs().max(angle_gap(zx.phi, y.phi));
    ok &= dxx <= 1e-12 && dzy <= 1e-12;
    lines.push(format!("X² deviation {dxx:.1e}, decode(ZX) − decode(Y) {dzy:.1e}"));

    let coeffs = squeezing_model();
    let beta = C64::new(0.7, 0.2);
    let mut worst_fid: f64 = 1.0;
    for strategy in STRATEGIES {
        let n = not_circuit(&coeffs, beta, 1.0, strategy).map_err(err)?;
        worst_fid = worst_fid.min(n.fidelity().map_err(err)?);
    }
    ok &= worst_fid >= 1.0 - 1e-9;
    lines.push(format!("NOT fidelity ≥ {worst_fid:.12}"));

    let frame = Frame::at(&coeffs, 1.0, SplitStrategy::default()).map_err(err)?;
    let sent = squeezelab::qubit::prepare(&frame, beta);
    for t in [0.7, 1.3] {
        let (_, filtered) = receive(&coeffs, &sent, t, SplitStrategy::default()).map_err(err)?;
        let state = filtered.state().map_err(err)?;
        let purity = state.purity();
        let excess = wehrl_excess(&state).map_err(err)?;
        ok &= purity < 0.999 && excess > 1e-4;
        lines.push(format!("eavesdrop t={t}: purity {purity:.6}, S_W − 1 = {excess:.4e}"));
    }
    check(ok, lines.join("; "))
}

fn cnot() -> Outcome {
    let start = Instant::now();
    let frame = Frame::at(&squeezing_model(), 1.0, SplitStrategy::default()).map_err(err)?;
    let spec = CnotGridSpec::default();
    let general = cnot_apply(C64::new(0.9, -0.3), &frame.b, spec).map_err(err)?;
    let symmetric = cnot_apply(C64::new(0.0, 0.0), &frame.b, spec).map_err(err)?;
    within(start.elapsed(), Duration::from_secs(30))?;
    let mut worst_row: f64 = 0.0;
    for o in [&general, &symmetric] {
        for row in o.conditional {
            worst_row = worst_row.max((row[0] + row[1] - 1.0).abs());
        }
    }
    let dn = (general.grid.norm - 1.0).abs().max((symmetric.grid.norm - 1.0).abs());
    let dp1 = (symmetric.control_p1 - 0.5).abs();
    let nu = bogoliubov(&frame.b).nu.norm();
    check(
        dn <= 1e-6 && worst_row <= 1e-6 && dp1 <= 1e-6,
        format!("512² grid (|ν| = {nu:.3}): norm error {dn:.1e}, row-sum error {worst_row:.1e}, β=0 control P₁ − 0.5 = {dp1:.1e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("commutator suite", commutator_suite),
        ("factorization vs Fock oracle", factorization_vs_oracle),
        ("privileged-time purity", privileged_time_purity),
        ("coherent output of the worked example", coherent_output),
        ("entropy anchors", entropy_anchors),
        ("entropy bounds", entropy_bounds),
        ("quartic window law", quartic_window),
        ("filter existence threshold", filter_threshold),
        ("qubit layer", qubit_layer),
        ("CNOT grid", cnot),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name} [{elapsed:.2?}]: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL {name} [{elapsed:.2?}]: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
