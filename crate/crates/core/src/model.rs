//! Coefficient providers for the quadratic dissipative generator
//!
//! ```text
//! dρ/dt = (1/iħ)[H_s, ρ] − k1{q,ρ,q} − k2{p,ρ,p} + k3{p,ρ,q} + k4{q,ρ,p}
//! H_s   = b11 q² + b12 (qp + pq) + b22 p²,      k4 = k3*
//! ```
//!
//! Built-in models are closed-form; user models are piecewise-linear tables.

use std::fmt;
use std::io::Read;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{positive, Error, Result};
use crate::wsolve::{WPoint, WTrajectory};

/// Generator coefficients evaluated at one instant. `k4` is never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub b11: f64,
    pub b12: f64,
    pub b22: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: C64,
}

impl Coefficients {
    pub fn zero() -> Self {
        Self { b11: 0.0, b12: 0.0, b22: 0.0, k1: 0.0, k2: 0.0, k3: C64::new(0.0, 0.0) }
    }

    pub fn k4(&self) -> C64 {
        self.k3.conj()
    }
}

type CoefficientFn = Arc<dyn Fn(f64) -> Coefficients + Send + Sync>;

#[derive(Clone)]
pub enum ModelKind {
    Reference { omega: f64, g: f64, c: f64 },
    Squeezing { omega: f64, s0: f64, t_star: f64, g: f64, c: f64 },
    Optical { gamma: f64, nbar: f64 },
    Table(CoefficientTable),
    Custom(CoefficientFn),
}

impl fmt::Debug for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Reference { omega, g, c } => {
                write!(f, "Reference {{ omega: {omega}, g: {g}, c: {c} }}")
            }
            Self::Squeezing { omega, s0, t_star, g, c } => write!(
                f,
                "Squeezing {{ omega: {omega}, s0: {s0}, t_star: {t_star}, g: {g}, c: {c} }}"
            ),
            Self::Optical { gamma, nbar } => write!(f, "Optical {{ gamma: {gamma}, nbar: {nbar} }}"),
            Self::Table(t) => write!(f, "Table({} rows)", t.times.len()),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// A time-dependent coefficient provider. Immutable and cheap to clone.
#[derive(Debug, Clone)]
pub struct QdeCoefficients {
    kind: ModelKind,
    hbar: f64,
    t_min: f64,
}

impl QdeCoefficients {
    /// Wrap an arbitrary closure. The closure must be defined for every `t ≥ 0`
    /// the caller integrates over and must keep `Im k3 < 0`.
    pub fn custom<F>(f: F, hbar: f64, t_min: f64) -> Result<Self>
    where
        F: Fn(f64) -> Coefficients + Send + Sync + 'static,
    {
        Ok(Self {
            kind: ModelKind::Custom(Arc::new(f)),
            hbar: positive("hbar", hbar)?,
            t_min: positive("t_min", t_min)?,
        })
    }

    pub fn from_table(table: CoefficientTable, hbar: f64) -> Result<Self> {
        let t_min = 1e-3 * table.t_max();
        Ok(Self { kind: ModelKind::Table(table), hbar: positive("hbar", hbar)?, t_min })
    }

    pub fn with_t_min(mut self, t_min: f64) -> Result<Self> {
        self.t_min = positive("t_min", t_min)?;
        Ok(self)
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Earliest time at which lowering operators may be built; they are singular at t = 0.
    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    /// The privileged time built into the model, when it has one.
    pub fn t_star(&self) -> Option<f64> {
        match self.kind {
            ModelKind::Squeezing { t_star, .. } => Some(t_star),
            _ => None,
        }
    }

    pub fn sample(&self, t: f64) -> Result<Coefficients> {
        if !(t >= 0.0) {
            return Err(Error::CoefficientUndefined { t, lo: 0.0, hi: f64::INFINITY });
        }
        let quarter = C64::new(0.0, -0.25);
        Ok(match &self.kind {
            ModelKind::Reference { omega, g, c } => Coefficients {
                b11: omega / 2.0,
                b12: 0.0,
                b22: omega / 2.0,
                k1: c * g / 4.0,
                k2: c * g / 4.0,
                k3: quarter * *g,
            },
            ModelKind::Squeezing { omega, s0, t_star, g, c } => {
                let lag = t - t_star;
                // Re k3 = 2 e^{-w4} w1 s0 (t − t*) with w4 = g t and w1 = (c/4)(e^{gt} − 1),
                // which holds dw3/dt at zero.
                let re_k3 = 0.5 * c * (-(-g * t).exp_m1()) * s0 * lag;
                Coefficients {
                    b11: (omega + s0 * lag) / 2.0,
                    b12: 0.0,
                    b22: (omega - s0 * lag) / 2.0,
                    k1: c * g / 4.0,
                    k2: c * g / 4.0,
                    k3: C64::new(re_k3, -g / 4.0),
                }
            }
            ModelKind::Optical { gamma, nbar } => {
                let diffusion = gamma * (2.0 * nbar + 1.0) / (4.0 * self.hbar);
                Coefficients {
                    b11: 0.0,
                    b12: 0.0,
                    b22: 0.0,
                    k1: diffusion,
                    k2: diffusion,
                    k3: C64::new(0.0, -gamma / (4.0 * self.hbar)),
                }
            }
            ModelKind::Table(table) => table.interpolate(t)?,
            ModelKind::Custom(f) => f(t),
        })
    }
}

/// Thermal-like reference model: `b11 = b22 = ω/2`, `k1 = k2 = c·g/4`, `k3 = −i g/4`.
///
/// Its w-solution is `w4 = g t`, `w1 = w2 = (c/4)(e^{gt} − 1)`, `w3 = 0`.
pub fn make_reference_model(omega: f64, g: f64, c: f64) -> Result<QdeCoefficients> {
    validate_noise(g, c)?;
    Ok(QdeCoefficients { kind: ModelKind::Reference { omega, g, c }, hbar: 1.0, t_min: 1e-3 })
}

/// Reference model plus a linearly ramped squeezing term in the Hamiltonian that
/// vanishes at `t_star`. `Re k3` is tuned so that `w3 ≡ 0`.
pub fn make_squeezing_model(omega: f64, s0: f64, t_star: f64, g: f64, c: f64) -> Result<QdeCoefficients> {
    positive("t_star", t_star)?;
    validate_noise(g, c)?;
    Ok(QdeCoefficients {
        kind: ModelKind::Squeezing { omega, s0, t_star, g, c },
        hbar: 1.0,
        t_min: 1e-3 * t_star,
    })
}

/// Rotating-wave optical master equation in the interaction picture. Expanding
/// `a = (q + ip)/√(2ħ)` gives `k1 = k2 = γ(2n̄+1)/(4ħ)` and `k3 = −iγ/(4ħ)`.
pub fn make_optical_model(gamma: f64, nbar: f64) -> Result<QdeCoefficients> {
    positive("gamma", gamma)?;
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::InvalidParameter { name: "nbar", value: nbar, reason: "must be non-negative" });
    }
    Ok(QdeCoefficients { kind: ModelKind::Optical { gamma, nbar }, hbar: 1.0, t_min: 1e-3 })
}

fn validate_noise(g: f64, c: f64) -> Result<()> {
    positive("g", g)?;
    if !(c > 1.0) || !c.is_finite() {
        return Err(Error::InvalidParameter { name: "c", value: c, reason: "must exceed 1" });
    }
    Ok(())
}

/// Piecewise-linear coefficient table.
///
/// CSV layout (header required, one row per time node, strictly increasing `t`
/// starting at 0):
///
/// ```text
/// t,b11,b12,b22,k1,k2,k3_re,k3_im
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    times: Vec<f64>,
    rows: Vec<Coefficients>,
}

pub const TABLE_COLUMNS: [&str; 8] = ["t", "b11", "b12", "b22", "k1", "k2", "k3_re", "k3_im"];

impl CoefficientTable {
    pub fn new(times: Vec<f64>, rows: Vec<Coefficients>) -> Result<Self> {
        if times.len() < 2 || times.len() != rows.len() {
            return Err(Error::Table("need at least two rows with matching lengths".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::Table(format!("first time node must be 0, got {}", times[0])));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Table("time nodes must be strictly increasing".into()));
        }
        for (t, r) in times.iter().zip(&rows) {
            let vals = [r.b11, r.b12, r.b22, r.k1, r.k2, r.k3.re, r.k3.im];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::Table(format!("non-finite coefficient at t = {t}")));
            }
            if r.k1 < 0.0 || r.k2 < 0.0 {
                return Err(Error::Table(format!("negative noise rate at t = {t}")));
            }
            if !(r.k3.im < 0.0) {
                return Err(Error::Table(format!("Im k3 must be negative (t = {t})")));
            }
        }
        Ok(Self { times, rows })
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Table(e.to_string()))?.clone();
        let mut index = [0usize; 8];
        for (slot, name) in index.iter_mut().zip(TABLE_COLUMNS) {
            *slot = headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Table(format!("missing column `{name}`")))?;
        }
        let mut times = Vec::new();
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Table(e.to_string()))?;
            let mut v = [0.0; 8];
            for (k, &col) in index.iter().enumerate() {
                let field = rec.get(col).unwrap_or("");
                v[k] = field
                    .parse()
                    .map_err(|_| Error::Table(format!("row {}: cannot parse `{field}`", line + 1)))?;
            }
            times.push(v[0]);
            rows.push(Coefficients {
                b11: v[1],
                b12: v[2],
                b22: v[3],
                k1: v[4],
                k2: v[5],
                k3: C64::new(v[6], v[7]),
            });
        }
        Self::new(times, rows)
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Linear interpolation between bracketing nodes. Kinks at the nodes force
    /// the adaptive stepper to shrink its steps there.
    pub fn interpolate(&self, t: f64) -> Result<Coefficients> {
        let hi = self.t_max();
        if !(0.0..=hi).contains(&t) {
            return Err(Error::CoefficientUndefined { t, lo: 0.0, hi });
        }
        let j = self.times.partition_point(|&x| x <= t).clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[j - 1], self.times[j]);
        let s = (t - t0) / (t1 - t0);
        let (a, b) = (&self.rows[j - 1], &self.rows[j]);
        let lerp = |x: f64, y: f64| x + s * (y - x);
        Ok(Coefficients {
            b11: lerp(a.b11, b.b11),
            b12: lerp(a.b12, b.b12),
            b22: lerp(a.b22, b.b22),
            k1: lerp(a.k1, b.k1),
            k2: lerp(a.k2, b.k2),
            k3: C64::new(lerp(a.k3.re, b.k3.re), lerp(a.k3.im, b.k3.im)),
        })
    }
}

/// Per-sample outcome of the four positivity tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalitySample {
    pub t: f64,
    pub w1_positive: bool,
    pub w2_positive: bool,
    pub discriminant_ok: bool,
    pub w4_positive: bool,
}

impl PhysicalitySample {
    pub fn passes(&self) -> bool {
        self.w1_positive && self.w2_positive && self.discriminant_ok && self.w4_positive
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalityReport {
    pub samples: Vec<PhysicalitySample>,
    pub first_violation: Option<f64>,
}

impl PhysicalityReport {
    pub fn all_ok(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Relative slack for quantities that vanish exactly on the physicality
/// boundary (zero-temperature damping) but come out of the solver at roundoff.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// `w1 w2 − w3² − (e^{w4} − 1)²/(16ħ²)`.
pub fn discriminant(w: &WPoint, hbar: f64) -> f64 {
    let e = w.w4.exp_m1();
    w.w1 * w.w2 - w.w3 * w.w3 - e * e / (16.0 * hbar * hbar)
}

pub fn check_point(t: f64, w: &WPoint, hbar: f64) -> PhysicalitySample {
    PhysicalitySample {
        t,
        w1_positive: w.w1 > 0.0,
        w2_positive: w.w2 > 0.0,
        discriminant_ok: discriminant(w, hbar) >= -BOUNDARY_TOL * (w.w1 * w.w2).abs(),
        w4_positive: w.w4 > 0.0,
    }
}

pub fn check_physicality(traj: &WTrajectory, hbar: f64) -> PhysicalityReport {
    let samples: Vec<_> = traj.samples().map(|(t, w)| check_point(t, &w, hbar)).collect();
    let first_violation = samples.iter().find(|s| !s.passes()).map(|s| s.t);
    PhysicalityReport { samples, first_violation }
}
