//! Scenario files: TOML with one table per concern. Complex numbers are
//! `[re, im]` pairs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use squeezelab::algebra::SplitStrategy;
use squeezelab::channels::Frame;
use squeezelab::gaussian::{eigenstate_of, GaussianState};
use squeezelab::model::{
    make_optical_model, make_reference_model, make_squeezing_model, CoefficientTable, QdeCoefficients,
};
use squeezelab::C64;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub scenario: Scenario,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
    pub state: Option<StateConfig>,
    #[serde(default)]
    pub entropy: EntropyConfig,
    pub secure: Option<SecureConfig>,
    #[serde(default)]
    pub cnot: CnotConfig,
    #[serde(default)]
    pub fock: FockConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ModelConfig {
    Reference { omega: f64, g: f64, c: f64 },
    Squeezing { omega: f64, s0: f64, t_star: f64, g: f64, c: f64 },
    Optical { gamma: f64, nbar: f64 },
    /// CSV coefficient table; a relative path is resolved against the config file.
    Table { path: PathBuf, #[serde(default = "one")] hbar: f64 },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitName {
    #[default]
    QFilter,
    PFilter,
    Symmetric,
}

impl From<SplitName> for SplitStrategy {
    fn from(s: SplitName) -> Self {
        match s {
            SplitName::QFilter => SplitStrategy::QFilter,
            SplitName::PFilter => SplitStrategy::PFilter,
            SplitName::Symmetric => SplitStrategy::ExampleSymmetric,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Privileged time; defaults to the squeezing model's own `t_star`.
    pub t_star: Option<f64>,
    #[serde(default)]
    pub beta: [f64; 2],
    #[serde(default)]
    pub split: SplitName,
    /// End of the simulated interval; defaults to `2 t_star`.
    pub horizon: Option<f64>,
    /// Report times for `simulate` and `validate`; defaults to `[t_star]`.
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

fn default_rel_tol() -> f64 {
    squeezelab::wsolve::DEFAULT_REL_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rel_tol: default_rel_tol() }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for outputs when `--out` is not given.
    pub dir: Option<PathBuf>,
}

/// Initial state for `simulate` and `validate`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StateConfig {
    /// `|β⟩_{C(t*)}` with β from `scenario.beta`.
    CEigenstate,
    Coherent { alpha: [f64; 2] },
    Moments { mean: [f64; 2], cov: [f64; 3] },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyConfig {
    #[serde(default = "default_eps")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_scan_points")]
    pub points: usize,
    #[serde(default = "default_span")]
    pub quartic_span: f64,
}

fn default_eps() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4]
}

fn default_scan_points() -> usize {
    201
}

fn default_span() -> f64 {
    0.02
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self { epsilon: default_eps(), points: default_scan_points(), quartic_span: default_span() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecureConfig {
    pub eavesdrop_times: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CnotConfig {
    #[serde(default = "default_cnot_points")]
    pub points: usize,
    #[serde(default = "default_cnot_extent")]
    pub extent: f64,
}

fn default_cnot_points() -> usize {
    512
}

fn default_cnot_extent() -> f64 {
    8.0
}

impl Default for CnotConfig {
    fn default() -> Self {
        Self { points: default_cnot_points(), extent: default_cnot_extent() }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_n() -> usize {
    squeezelab::fockoracle::DEFAULT_DIM
}

fn default_dt() -> f64 {
    squeezelab::fockoracle::DEFAULT_DT
}

impl Default for FockConfig {
    fn default() -> Self {
        Self { n: default_n(), dt: default_dt() }
    }
}

/// A parsed, validated scenario with its model built.
pub struct Loaded {
    pub config: ScenarioConfig,
    pub sha256: String,
    pub coeffs: QdeCoefficients,
    pub t_star: f64,
    pub horizon: f64,
    pub base_dir: PathBuf,
}

impl Loaded {
    pub fn split(&self) -> SplitStrategy {
        self.config.scenario.split.into()
    }

    pub fn beta(&self) -> C64 {
        pair(self.config.scenario.beta)
    }

    pub fn times(&self) -> Vec<f64> {
        self.config.scenario.times.clone().unwrap_or_else(|| vec![self.t_star])
    }

    pub fn initial_state(&self) -> Result<GaussianState, CliError> {
        let h = self.coeffs.hbar();
        Ok(match self.config.state.clone().unwrap_or(StateConfig::CEigenstate) {
            StateConfig::CEigenstate => {
                let frame = Frame::at(&self.coeffs, self.t_star, self.split())?;
                eigenstate_of(&frame.c()?, self.beta())
            }
            StateConfig::Coherent { alpha } => GaussianState::coherent(pair(alpha), h),
            StateConfig::Moments { mean, cov } => GaussianState::from_moments(mean[0], mean[1], cov[0], cov[1], cov[2], h)
                .map_err(|e| CliError::config(format!("state.cov: {e}")))?,
        })
    }

    /// Where an output goes: `--out`, else `output.dir/<default_name>`, else stdout.
    pub fn output_path(&self, explicit: Option<&Path>, default_name: &str) -> Option<PathBuf> {
        explicit.map(Path::to_path_buf).or_else(|| {
            self.config.output.dir.as_ref().map(|d| {
                let d = if d.is_relative() { self.base_dir.join(d) } else { d.clone() };
                d.join(default_name)
            })
        })
    }
}

pub fn pair(x: [f64; 2]) -> C64 {
    C64::new(x[0], x[1])
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let raw = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let sha256 = hex::encode(Sha256::digest(&raw));
    let text = std::str::from_utf8(&raw).map_err(|_| CliError::config("config file is not UTF-8"))?;
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    build(config, sha256, base_dir)
}

fn build_model(m: &ModelConfig, base: &Path) -> Result<QdeCoefficients, CliError> {
    let named = |e: squeezelab::Error| CliError::config(format!("model: {e}"));
    match m {
        ModelConfig::Reference { omega, g, c } => make_reference_model(*omega, *g, *c).map_err(named),
        ModelConfig::Squeezing { omega, s0, t_star, g, c } => {
            make_squeezing_model(*omega, *s0, *t_star, *g, *c).map_err(named)
        }
        ModelConfig::Optical { gamma, nbar } => make_optical_model(*gamma, *nbar).map_err(named),
        ModelConfig::Table { path, hbar } => {
            let p = if path.is_relative() { base.join(path) } else { path.clone() };
            let file = fs::File::open(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            let table = CoefficientTable::from_csv(file).map_err(named)?;
            QdeCoefficients::from_table(table, *hbar).map_err(named)
        }
    }
}

fn build(config: ScenarioConfig, sha256: String, base_dir: PathBuf) -> Result<Loaded, CliError> {
    let coeffs = build_model(&config.model, &base_dir)?;
    let t_min = coeffs.t_min();
    let t_star = config
        .scenario
        .t_star
        .or(coeffs.t_star())
        .ok_or_else(|| CliError::config("missing key `scenario.t_star` (required unless the model defines one)"))?;
    let horizon = config.scenario.horizon.unwrap_or(2.0 * t_star);
    let in_range = |key: &str, t: f64| -> Result<(), CliError> {
        if t.is_finite() && t >= t_min && t <= horizon {
            Ok(())
        } else {
            Err(CliError::config(format!("`{key}` = {t} must lie in [t_min, horizon] = [{t_min}, {horizon}]")))
        }
    };
    if !(horizon > t_min) {
        return Err(CliError::config(format!("`scenario.horizon` = {horizon} must exceed t_min = {t_min}")));
    }
    in_range("scenario.t_star", t_star)?;
    for &t in config.scenario.times.iter().flatten() {
        in_range("scenario.times", t)?;
    }
    if config.scenario.times.as_ref().is_some_and(Vec::is_empty) {
        return Err(CliError::config("`scenario.times` must not be empty"));
    }
    if config.scenario.beta.iter().any(|x| !x.is_finite()) {
        return Err(CliError::config("`scenario.beta` must be finite"));
    }
    if !(config.tolerances.rel_tol > 0.0 && config.tolerances.rel_tol < 1e-3) {
        return Err(CliError::config("`tolerances.rel_tol` must lie in (0, 1e-3)"));
    }
    let e = &config.entropy;
    if e.epsilon.is_empty() || e.epsilon.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(CliError::config("`entropy.epsilon` values must be positive"));
    }
    if e.points < 2 {
        return Err(CliError::config("`entropy.points` must be at least 2"));
    }
    if !(e.quartic_span > 0.0 && e.quartic_span < t_star) {
        return Err(CliError::config("`entropy.quartic_span` must lie in (0, t_star)"));
    }
    if let Some(s) = &config.secure {
        if s.eavesdrop_times.is_empty() {
            return Err(CliError::config("`secure.eavesdrop_times` must not be empty"));
        }
        for &t in &s.eavesdrop_times {
            in_range("secure.eavesdrop_times", t)?;
            if t == t_star {
                return Err(CliError::config("`secure.eavesdrop_times` must not contain t_star"));
            }
        }
    }
    if config.cnot.points < 2 || config.cnot.points % 2 == 1 {
        return Err(CliError::config("`cnot.points` must be even and at least 2"));
    }
    if !(config.cnot.extent >= 6.0) {
        return Err(CliError::config("`cnot.extent` must be at least 6"));
    }
    if !(8..=squeezelab::fockoracle::MAX_DIM).contains(&config.fock.n) {
        return Err(CliError::config("`fock.n` must lie in [8, 200]"));
    }
    if !(config.fock.dt > 0.0 && config.fock.dt <= 0.1) {
        return Err(CliError::config("`fock.dt` must lie in (0, 0.1]"));
    }
    Ok(Loaded { config, sha256, coeffs, t_star, horizon, base_dir })
}
