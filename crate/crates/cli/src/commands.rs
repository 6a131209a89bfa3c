use std::f64::consts::{PI, TAU};
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use squeezelab::channels::Frame;
use squeezelab::entropy::{delta_t_formula, wehrl_excess, PrivilegedTimeProbe};
use squeezelab::fockoracle::{
    build_generator, eigen_ket, gaussian_to_fock, integrate_master_from, ket_fidelity, wdp_fock, FockDensityMatrix,
    Ladder, OpticalGenerator,
};
use squeezelab::gaussian::{eigenstate_of, GaussianState};
use squeezelab::model::{discriminant, make_optical_model, ModelKind};
use squeezelab::qubit::{cnot_apply, not_circuit, prepare, receive, CnotGridSpec, QubitCoords};
use squeezelab::wsolve::solve_w;
use squeezelab::C64;

use crate::config::Loaded;
use crate::error::CliError;
use crate::output::{metadata, num, write_json, Csv};

pub const SEED_VAR: &str = "SQUEEZELAB_SEED";

/// Largest |ν(t*, t*)| for which the window law is evaluated.
const NU_STAR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Picture {
    Schrodinger,
    Dp,
}

fn complex(z: C64) -> Value {
    json!([z.re, z.im])
}

fn state_json(s: &GaussianState) -> Value {
    let c = s.cov();
    json!({ "mean": s.mean(), "cov": [c[(0, 0)], c[(0, 1)], c[(1, 1)]], "purity": s.purity() })
}

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// `S_W − 1`, or NaN outside natural units.
fn excess_or_nan(s: &GaussianState) -> f64 {
    if s.hbar() == 1.0 {
        wehrl_excess(s).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    }
}

pub fn solve_w_cmd(l: &Loaded, out: Option<&Path>, points: usize) -> Result<(), CliError> {
    if points < 2 {
        return Err(CliError::config("--points must be at least 2"));
    }
    let traj = solve_w(&l.coeffs, l.horizon, l.config.tolerances.rel_tol)?;
    let path = l.output_path(out, "w.csv");
    let mut csv = Csv::create(path.as_deref(), &l.sha256, &["t", "w1", "w2", "w3", "w4", "discriminant", "physical"])?;
    let h = l.coeffs.hbar();
    for t in grid(traj.t_min(), traj.t_end(), points) {
        let w = traj.at(t)?;
        let d = discriminant(&w, h);
        let physical = squeezelab::model::check_point(t, &w, h).passes();
        csv.row(&[num(t), num(w.w1), num(w.w2), num(w.w3), num(w.w4), num(d), (physical as u8).to_string()])?;
    }
    csv.finish()?;
    match traj.physicality().first_violation {
        Some(t) => Err(CliError::Physicality(format!("w-point fails the positivity tests at t = {t}"))),
        None => Ok(()),
    }
}

pub fn simulate(l: &Loaded, out: Option<&Path>, times: Option<Vec<f64>>, picture: Picture) -> Result<(), CliError> {
    let times = times.unwrap_or_else(|| l.times());
    for &t in &times {
        if !(t >= l.coeffs.t_min() && t <= l.horizon) {
            return Err(CliError::config(format!("--times value {t} outside [t_min, horizon]")));
        }
    }
    let s0 = l.initial_state()?;
    let path = l.output_path(out, "simulate.csv");
    let cols = ["t", "w1", "w2", "w3", "w4", "mq", "mp", "sqq", "sqp", "spp", "purity", "S_W"];
    let mut csv = Csv::create(path.as_deref(), &l.sha256, &cols)?;
    for t in times {
        let frame = Frame::at(&l.coeffs, t, l.split())?;
        let s = match picture {
            Picture::Schrodinger => frame.schrodinger_propagate(&s0)?,
            Picture::Dp => frame.dp_propagate(&s0)?,
        };
        let [mq, mp] = s.mean();
        let c = s.cov();
        let w = frame.w;
        let fields = [t, w.w1, w.w2, w.w3, w.w4, mq, mp, c[(0, 0)], c[(0, 1)], c[(1, 1)], s.purity(), 1.0 + excess_or_nan(&s)];
        csv.row(&fields.map(num))?;
    }
    csv.finish()
}

pub fn entropy_scan(l: &Loaded, out: Option<&Path>, summary: Option<&Path>, eps: Option<Vec<f64>>) -> Result<(), CliError> {
    let eps = eps.unwrap_or_else(|| l.config.entropy.epsilon.clone());
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(CliError::config("--eps values must be positive"));
    }
    let probe = PrivilegedTimeProbe::new(&l.coeffs, l.t_star, l.split())?;
    let beta = l.beta();
    let csv_path = l.output_path(out, "entropy.csv");
    let mut csv = Csv::create(csv_path.as_deref(), &l.sha256, &["t", "S_W", "S_W_minus_1", "purity"])?;
    for t in grid(l.coeffs.t_min(), l.horizon, l.config.entropy.points) {
        let s = probe.dp_state(beta, t)?;
        let excess = wehrl_excess(&s)?;
        csv.row(&[num(t), num(1.0 + excess), num(excess), num(s.purity())])?;
    }
    csv.finish()?;

    let nu_star = probe.nu_abs(l.t_star)?;
    let mut report = json!({
        "metadata": metadata(&l.sha256),
        "t_star": l.t_star,
        "w4_star": probe.w4_star(),
        "nu_at_t_star": nu_star,
        "excess_at_t_star": probe.excess_entropy(l.t_star)?,
        "window_law_applicable": nu_star <= NU_STAR_TOL,
    });
    // The quartic law expands around ν(t*, t*) = 0; other splits leave B(t*) squeezed.
    if nu_star <= NU_STAR_TOL {
        let fit = probe.quartic_fit(l.config.entropy.quartic_span, 8, 1e-3 * l.t_star)?;
        let mut windows = Vec::new();
        for e in eps {
            let w = probe.scan_window(e)?;
            windows.push(json!({
                "epsilon": e,
                "formula_half_width": delta_t_formula(e, probe.w4_star(), fit.d2nu)?,
                "t_lo": w.t_lo,
                "t_hi": w.t_hi,
                "half_width": w.half_width(),
                "lo_at_horizon": w.lo_at_horizon,
                "hi_at_horizon": w.hi_at_horizon,
            }));
        }
        report["d2nu"] = json!(fit.d2nu);
        report["quartic"] = json!({ "fitted": fit.fitted, "predicted": fit.predicted, "relative_error": fit.relative_error() });
        report["windows"] = json!(windows);
    }
    let summary_path = l.output_path(summary, "entropy_summary.json");
    match (summary_path, &csv_path) {
        (Some(p), _) => write_json(Some(&p), &report),
        (None, Some(_)) => write_json(None, &report),
        (None, None) => {
            eprintln!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
            Ok(())
        }
    }
}

pub fn not_demo(l: &Loaded, out: Option<&Path>) -> Result<(), CliError> {
    let n = not_circuit(&l.coeffs, l.beta(), l.t_star, l.split())?;
    let b = n.frame.b;
    let report = json!({
        "metadata": metadata(&l.sha256),
        "t_star": l.t_star,
        "w4_star": n.frame.w.w4,
        "beta": complex(l.beta()),
        "b_star": { "u": complex(b.u()), "v": complex(b.v()) },
        "filter": { "exists": n.filtered.exists, "physical": n.filtered.physical },
        "output": state_json(&n.output),
        "target": state_json(&n.target),
        "amplitude": complex(n.amplitude()),
        "expected_amplitude": complex(-l.beta() * (-0.5 * n.frame.w.w4).exp()),
        "fidelity": n.fidelity()?,
    });
    write_json(l.output_path(out, "not.json").as_deref(), &report)
}

pub fn cnot_demo(l: &Loaded, out: Option<&Path>, beta: Option<C64>) -> Result<(), CliError> {
    let beta = beta.unwrap_or_else(|| l.beta());
    let frame = Frame::at(&l.coeffs, l.t_star, l.split())?;
    let spec = CnotGridSpec { points: l.config.cnot.points, extent: l.config.cnot.extent };
    let o = cnot_apply(beta, &frame.b, spec)?;
    if let Some(p) = l.output_path(out, "cnot_grid.csv") {
        let mut csv = Csv::create(Some(&p), &l.sha256, &["q1", "q2", "re", "im", "density"])?;
        for (i, &q1) in o.grid.q1.iter().enumerate() {
            for (j, &q2) in o.grid.q2.iter().enumerate() {
                let z = o.grid.at(i, j);
                csv.row(&[num(q1), num(q2), num(z.re), num(z.im), num(z.norm_sqr())])?;
            }
        }
        csv.finish()?;
    }
    let report = json!({
        "metadata": metadata(&l.sha256),
        "beta": complex(beta),
        "b_star": { "u": complex(frame.b.u()), "v": complex(frame.b.v()) },
        "grid": { "points": spec.points, "extent": spec.extent, "norm": o.grid.norm },
        "joint": o.joint,
        "conditional": o.conditional,
        "control_p1": o.control_p1,
    });
    write_json(None, &report)
}

pub fn secure_demo(l: &Loaded, out: Option<&Path>) -> Result<(), CliError> {
    let times = l
        .config
        .secure
        .as_ref()
        .map(|s| s.eavesdrop_times.clone())
        .ok_or_else(|| CliError::config("missing table `[secure]` with key `eavesdrop_times`"))?;
    let split = l.split();
    let beta = l.beta();
    let star = Frame::at(&l.coeffs, l.t_star, split)?;
    let rescale = (0.5 * star.w.w4).exp();
    let intended = QubitCoords::from_moments(&eigenstate_of(&star.b, beta));
    let target = eigenstate_of(&star.b, beta / rescale);
    let sent = prepare(&star, beta);

    let path = l.output_path(out, "secure.csv");
    let cols = ["filter_time", "purity", "S_W", "theta_err", "phi_err", "fidelity_to_target", "filter_status"];
    let mut csv = Csv::create(path.as_deref(), &l.sha256, &cols)?;
    for t in std::iter::once(l.t_star).chain(times) {
        let (_, filtered) = receive(&l.coeffs, &sent, t, split)?;
        let status = match (filtered.exists, filtered.physical) {
            (true, true) => "physical",
            (true, false) => "unphysical",
            _ => "nonexistent",
        };
        let nan = f64::NAN;
        let (purity, sw, dtheta, dphi, fid) = match filtered.state() {
            Ok(s) => {
                let m = s.mean();
                let scaled = GaussianState::new([m[0] * rescale, m[1] * rescale], s.cov(), s.hbar())?;
                let got = QubitCoords::from_moments(&scaled);
                (s.purity(), 1.0 + excess_or_nan(&s), got.theta - intended.theta, wrap(got.phi - intended.phi), s.fidelity(&target)?)
            }
            Err(_) => (if filtered.exists { 0.5 * l.coeffs.hbar() / filtered.det().sqrt() } else { nan }, nan, nan, nan, nan),
        };
        let mut row = [t, purity, sw, dtheta, dphi, fid].map(num).to_vec();
        row.push(status.to_string());
        csv.row(&row)?;
    }
    csv.finish()
}

fn seed() -> Result<u64, CliError> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::config(format!("{SEED_VAR} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(0),
    }
}

struct Check {
    name: String,
    delta: f64,
    tolerance: f64,
    passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, delta: f64, tolerance: f64) -> Self {
        Self { name: name.into(), delta, tolerance, passed: delta <= tolerance }
    }

    fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), delta: value, tolerance: bound, passed: value >= bound }
    }

    fn json(&self) -> Value {
        json!({ "name": self.name, "delta": self.delta, "tolerance": self.tolerance, "pass": self.passed })
    }
}

fn moment_gaps(rho: &FockDensityMatrix, s: &GaussianState) -> (f64, f64) {
    let (mean, cov) = rho.moments();
    let [mq, mp] = s.mean();
    ((mean[0] - mq).abs().max((mean[1] - mp).abs()), (cov - s.cov()).abs().max())
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C64> {
    let m = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn validate(l: &Loaded, out: Option<&Path>) -> Result<bool, CliError> {
    let seed = seed()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, dt) = (l.config.fock.n, l.config.fock.dt);
    let h = l.coeffs.hbar();
    let mut checks = Vec::new();

    let rho = random_hermitian(&mut rng, n);
    let d = build_generator(&l.coeffs, l.t_star, n)?.apply(&rho);
    checks.push(Check::new("generator_trace_free", d.trace().norm(), 1e-10));
    checks.push(Check::new("generator_hermiticity", max_abs(&(&d - d.adjoint())), 1e-10));

    let (gamma, nbar) = match l.coeffs.kind() {
        ModelKind::Optical { gamma, nbar } => (*gamma, *nbar),
        _ => (1.0, 0.5),
    };
    let optical = make_optical_model(gamma, nbar)?;
    let direct = OpticalGenerator::new(&Ladder::new(n, 1.0), gamma, nbar).apply(&rho);
    let mapped = build_generator(&optical, 0.0, n)?.apply(&rho);
    checks.push(Check::new("optical_mapping", max_abs(&(direct - mapped)), 1e-10));

    let s0 = l.initial_state()?;
    let mut times = l.times();
    times.sort_by(f64::total_cmp);
    let mut small = gaussian_to_fock(&s0, n)?;
    let mut large = gaussian_to_fock(&s0, 2 * n)?;
    let mut t_prev = 0.0;
    for &t in &times {
        let run = integrate_master_from(&small, &l.coeffs, t_prev, t, dt)?;
        let run2 = integrate_master_from(&large, &l.coeffs, t_prev, t, dt)?;
        let g = Frame::at(&l.coeffs, t, l.split())?.schrodinger_propagate(&s0)?;
        let (dm, dc) = moment_gaps(&run.state, &g);
        checks.push(Check::new(format!("mean_vs_oracle@t={t}"), dm, 1e-6));
        checks.push(Check::new(format!("covariance_vs_oracle@t={t}"), dc, 1e-5));
        checks.push(Check::new(format!("trace@t={t}"), run.diagnostics.trace_error, 1e-8));
        checks.push(Check::new(format!("hermiticity@t={t}"), run.diagnostics.hermiticity_error, 1e-10));
        checks.push(Check::new(format!("negativity@t={t}"), (-run.diagnostics.min_eigenvalue).max(0.0), 1e-6));
        let (m1, c1) = run.state.moments();
        let (m2, c2) = run2.state.moments();
        let gap = (m1[0] - m2[0]).abs().max((m1[1] - m2[1]).abs()).max((c1 - c2).abs().max());
        checks.push(Check::new(format!("truncation_convergence@t={t}"), gap, 1e-6));
        small = run.state;
        large = run2.state;
        t_prev = t;
    }

    let star = Frame::at(&l.coeffs, l.t_star, l.split())?;
    let ket0 = eigen_ket(&star.c()?, l.beta(), n)?;
    let ket = wdp_fock(&ket0, &l.coeffs, l.t_star, l.split(), dt)?;
    let target = eigen_ket(&star.b, l.beta() * (-0.5 * star.w.w4).exp(), n)?;
    checks.push(Check::at_least("privileged_time_ket_fidelity", ket_fidelity(&ket, &target), 1.0 - 1e-6));

    // mixed squeezed states near the top of these ranges still leak ~1e-6 of mass at N=40
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let r: f64 = rng.random_range(-0.6..0.6);
        let th: f64 = rng.random_range(0.0..PI);
        let nb: f64 = rng.random_range(0.0..0.5);
        let (c, s) = (th.cos(), th.sin());
        let rot = nalgebra::Matrix2::new(c, -s, s, c);
        let diag = nalgebra::Matrix2::new((2.0 * r).exp(), 0.0, 0.0, (-2.0 * r).exp()) * (0.5 * h * (2.0 * nb + 1.0));
        let mean = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let st = GaussianState::new(mean, rot * diag * rot.transpose(), h)?;
        let (dm, dc) = moment_gaps(&gaussian_to_fock(&st, 2 * n)?, &st);
        worst = worst.max(dm).max(dc);
    }
    checks.push(Check::new("random_state_round_trip", worst, 1e-6));

    let passed = checks.iter().all(|c| c.passed);
    let report = json!({
        "metadata": metadata(&l.sha256),
        "seed": seed,
        "fock": { "n": n, "dt": dt },
        "pass": passed,
        "checks": checks.iter().map(Check::json).collect::<Vec<_>>(),
    });
    write_json(l.output_path(out, "validate.json").as_deref(), &report)?;
    Ok(passed)
}
