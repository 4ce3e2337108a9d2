//! Experiment configuration: JSON files, dotted `KEY=VALUE` overrides and
//! up-front validation.

use std::path::{Path, PathBuf};

use modspace_core::fields::{BandLimited, Gaussian};
use modspace_core::modulation::{build_window, embedding_holds, Window};
use modspace_core::propagator::PropagatorPlan;
use modspace_core::solver::Nonlinearity;
use modspace_core::spectral::{
    m_zero, ComplexField, DispersionParams, Exponent, GridSpec, ModIndex, Representation,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("override `{0}`: expected KEY=VALUE")]
    Override(String),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

fn field_error(field: &str, message: impl std::fmt::Display) -> ConfigError {
    ConfigError::Field {
        field: field.to_string(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Run name; outputs go to `<output dir>/<name>/`.
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub experiment: Experiment,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub dispersion: Option<DispersionConfig>,
    #[serde(default)]
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    /// Points per axis, a power of two.
    pub n: usize,
    /// Period length per axis.
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataConfig {
    Gaussian(Gaussian),
    BandLimited {
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Zero,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Decay(DecayConfig),
    Existence(ExistenceConfig),
    Holder(HolderConfig),
    Embedding(EmbeddingConfig),
    Kernel(KernelConfig),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Decay(_) => "decay",
            Experiment::Existence(_) => "existence",
            Experiment::Holder(_) => "holder",
            Experiment::Embedding(_) => "embedding",
            Experiment::Kernel(_) => "kernel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub count: usize,
    pub spacing: Spacing,
    #[serde(default)]
    pub include_zero: bool,
}

impl TimeGrid {
    pub fn samples(&self) -> Vec<f64> {
        let n = self.count;
        let mut out = Vec::with_capacity(n + 1);
        if self.include_zero && self.start > 0.0 {
            out.push(0.0);
        }
        for i in 0..n {
            let s = if n == 1 {
                0.0
            } else {
                i as f64 / (n - 1) as f64
            };
            out.push(match self.spacing {
                Spacing::Linear => self.start + s * (self.end - self.start),
                Spacing::Log => (self.start.ln() + s * (self.end.ln() - self.start.ln())).exp(),
            });
        }
        if let Some(last) = out.last_mut() {
            *last = self.end;
        }
        out
    }

    fn validate(&self, field: &str) -> Result<(), ConfigError> {
        if self.count == 0 {
            return Err(field_error(&format!("{field}.count"), "must be >= 1"));
        }
        if !(self.start >= 0.0) || !(self.end >= self.start) || !self.end.is_finite() {
            return Err(field_error(field, "need 0 <= start <= end < inf"));
        }
        if self.spacing == Spacing::Log && !(self.start > 0.0) {
            return Err(field_error(
                &format!("{field}.start"),
                "log spacing needs start > 0",
            ));
        }
        if self.count > 1 && self.end == self.start {
            return Err(field_error(field, "repeated sample times"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayNorm {
    Lebesgue,
    Modulation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub norm: DecayNorm,
    pub p: Exponent,
    #[serde(default = "exp_one")]
    pub q: Exponent,
    #[serde(default)]
    pub s: f64,
    pub times: TimeGrid,
    /// Reject boxes shorter than `4 · v_max · t_max`.
    #[serde(default = "yes")]
    pub enforce_box_rule: bool,
}

fn exp_one() -> Exponent {
    Exponent::ONE
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExistenceConfig {
    pub nonlinearity: NonlinearityConfig,
    #[serde(default = "exp_one")]
    pub q: Exponent,
    #[serde(default)]
    pub s: f64,
    pub t_max: f64,
    /// Uniform time nodes on `[0, t_max]`, endpoints included.
    pub nodes: usize,
    /// Ball radius; defaults to `radius_factor` times the weighted norm of
    /// the free evolution.
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default = "two")]
    pub radius_factor: f64,
    /// Smallness bound on the data; unchecked when absent.
    #[serde(default)]
    pub delta: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    #[serde(default)]
    pub allow_subcritical: bool,
    /// Report divergence with a zero exit code.
    #[serde(default)]
    pub allow_divergence: bool,
    /// Rerun with halved time step and compare fixed points.
    #[serde(default)]
    pub quadrature_check: bool,
    /// Exponential only: rerun with doubled series order and compare.
    #[serde(default)]
    pub order_check: bool,
    #[serde(default)]
    pub delta_search: Option<DeltaSearch>,
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaSearch {
    /// Largest data scale tried; the configured data is scale 1.
    pub max_scale: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NonlinearityConfig {
    Power {
        m: u32,
        #[serde(default)]
        sign: modspace_core::solver::Sign,
        #[serde(default)]
        variant: modspace_core::solver::PowerVariant,
    },
    Exponential {
        /// `[re, im]`.
        lambda: [f64; 2],
        rho: f64,
        /// Series order; chosen from the tail bound when absent.
        #[serde(default)]
        order: Option<usize>,
    },
}

impl NonlinearityConfig {
    pub fn effective_power(&self) -> u32 {
        match self {
            NonlinearityConfig::Power { m, .. } => *m,
            NonlinearityConfig::Exponential { .. } => 2,
        }
    }

    /// The nonlinearity with a concrete series order.
    pub fn resolve(&self, order: usize) -> Nonlinearity {
        match *self {
            NonlinearityConfig::Power { m, sign, variant } => {
                Nonlinearity::Power { m, sign, variant }
            }
            NonlinearityConfig::Exponential {
                lambda,
                rho,
                order: fixed,
            } => Nonlinearity::Exponential {
                lambda: num_complex::Complex64::new(lambda[0], lambda[1]),
                rho,
                order: fixed.unwrap_or(order),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderConfig {
    pub p1: Exponent,
    pub p2: Exponent,
    #[serde(default = "exp_one")]
    pub q: Exponent,
    #[serde(default)]
    pub s: f64,
    pub pairs: usize,
    /// Spectral radius of the random fields.
    pub radius: f64,
    /// Repeat every pair on the grid with twice the points.
    #[serde(default = "yes")]
    pub refine: bool,
}

impl HolderConfig {
    /// `p` with `1/p = 1/p1 + 1/p2`.
    pub fn target_p(&self) -> Result<Exponent, ConfigError> {
        let r = self.p1.reciprocal() + self.p2.reciprocal();
        if r > 1.0 + 1e-12 {
            return Err(field_error("experiment.p1", "1/p1 + 1/p2 must be <= 1"));
        }
        let p = if r == 0.0 {
            f64::INFINITY
        } else {
            1.0 / r.min(1.0)
        };
        Exponent::new(p).map_err(|e| field_error("experiment.p1", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub from: ModIndex,
    pub to: ModIndex,
    pub samples: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub d: usize,
    #[serde(default)]
    pub gamma_zero: bool,
    pub m_values: Vec<u32>,
    pub times: TimeGrid,
    /// Divergent when the final-decade log-log slope is at least this.
    #[serde(default = "slope_limit")]
    pub slope_limit: f64,
}

fn slope_limit() -> f64 {
    0.1
}

/// Read a config file, apply overrides, and validate.
pub fn load(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let config = parse(&text, overrides)?;
    config.validate()?;
    Ok(config)
}

/// Parse JSON text with overrides applied, without validation.
pub fn parse(text: &str, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let mut value: Value =
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(format!("invalid JSON: {e}")))?;
    for item in overrides {
        apply_override(&mut value, item)?;
    }
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Field {
            field: if path == "." { "config".into() } else { path },
            message: e.into_inner().to_string(),
        }
    })
}

/// Set a dotted key; the value is read as JSON when it parses, else as a string.
pub fn apply_override(root: &mut Value, item: &str) -> Result<(), ConfigError> {
    let (key, raw) = item
        .split_once('=')
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| ConfigError::Override(item.to_string()))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map = match node {
            Value::Object(map) => map,
            other => {
                *other = Value::Object(Default::default());
                match other {
                    Value::Object(map) => map,
                    _ => unreachable!(),
                }
            }
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert(Value::Object(Default::default()));
    }
    Ok(())
}

/// Grid, dispersion and data realized from a validated config.
pub struct Setup {
    pub grid: GridSpec,
    pub plan: PropagatorPlan,
    pub window: Window,
    pub data: ComplexField,
}

impl ExperimentConfig {
    pub fn grid_spec(&self) -> Result<GridSpec, ConfigError> {
        let g = self
            .grid
            .as_ref()
            .ok_or_else(|| field_error("grid", "missing"))?;
        if !(1..=3).contains(&g.d) {
            return Err(field_error("grid.d", "must be 1, 2 or 3"));
        }
        GridSpec::cube(g.d, g.n, g.length).map_err(|e| field_error("grid", e))
    }

    pub fn dispersion_params(&self) -> Result<DispersionParams, ConfigError> {
        let d = self
            .dispersion
            .as_ref()
            .ok_or_else(|| field_error("dispersion", "missing"))?;
        DispersionParams::new(d.alpha, d.beta, d.gamma).map_err(|e| field_error("dispersion", e))
    }

    pub fn sample_data(&self, grid: &GridSpec) -> Result<ComplexField, ConfigError> {
        let data = self
            .data
            .as_ref()
            .ok_or_else(|| field_error("data", "missing"))?;
        match data {
            DataConfig::Gaussian(g) => g.sample(grid).map_err(|e| field_error("data", e)),
            DataConfig::BandLimited { radius, amplitude } => BandLimited {
                radius: *radius,
                seed: self.seed,
                amplitude: *amplitude,
            }
            .sample(grid)
            .map_err(|e| field_error("data", e)),
            DataConfig::Zero => Ok(ComplexField::zeros(grid, Representation::Physical)),
        }
    }

    /// Grid, propagator, window and data together.
    pub fn setup(&self) -> Result<Setup, ConfigError> {
        let grid = self.grid_spec()?;
        let plan = PropagatorPlan::new(&grid, self.dispersion_params()?);
        let window = build_window(grid.dim(), &grid).map_err(|e| field_error("grid", e))?;
        let data = self.sample_data(&grid)?;
        Ok(Setup {
            grid,
            plan,
            window,
            data,
        })
    }

    /// Check every precondition that can be checked without running.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(field_error("name", "must be a non-empty file name"));
        }
        match &self.experiment {
            Experiment::Decay(c) => {
                let setup = self.setup()?;
                c.times.validate("experiment.times")?;
                if c.norm == DecayNorm::Lebesgue && c.times.samples().iter().any(|&t| t <= 0.0) {
                    return Err(field_error("experiment.times", "Lebesgue scans need t > 0"));
                }
                if c.p.value() < 2.0 {
                    return Err(field_error("experiment.p", "must be >= 2"));
                }
                ModIndex::new(c.p, c.q, c.s).map_err(|e| field_error("experiment.s", e))?;
                if setup.data.is_zero() {
                    return Err(field_error("data", "decay scans need nonzero data"));
                }
            }
            Experiment::Existence(c) => {
                let setup = self.setup()?;
                let d = setup.grid.dim();
                if !(c.t_max > 0.0) || c.nodes < 2 {
                    return Err(field_error("experiment", "need t_max > 0 and nodes >= 2"));
                }
                if !(c.tol > 0.0) || c.max_iter == 0 {
                    return Err(field_error("experiment", "need tol > 0 and max_iter >= 1"));
                }
                if !(c.radius_factor > 0.0) || c.radius.is_some_and(|r| !(r > 0.0)) {
                    return Err(field_error("experiment.radius", "must be > 0"));
                }
                if c.delta.is_some_and(|r| !(r > 0.0)) {
                    return Err(field_error("experiment.delta", "must be > 0"));
                }
                let idx = ModIndex::new(Exponent::ONE, c.q, c.s)
                    .map_err(|e| field_error("experiment.s", e))?;
                if !idx.is_admissible(d) {
                    return Err(field_error(
                        "experiment.q",
                        format!("(q, s) = ({}, {}) needs q = 1 or s > d/q'", c.q, c.s),
                    ));
                }
                c.nonlinearity
                    .resolve(1)
                    .validate()
                    .map_err(|e| field_error("experiment.nonlinearity", e))?;
                match c.nonlinearity {
                    NonlinearityConfig::Power { m, .. } => {
                        let m0 = m_zero(d, setup.plan.params().gamma_is_zero());
                        if (m as f64) <= m0 && !c.allow_subcritical {
                            return Err(field_error(
                                "experiment.nonlinearity.m",
                                format!("m = {m} is not above m0 = {m0:.6}; set allow_subcritical"),
                            ));
                        }
                    }
                    NonlinearityConfig::Exponential { .. } => {
                        if d < 2 && !c.allow_subcritical {
                            return Err(field_error("grid.d", "the exponential case needs d >= 2"));
                        }
                    }
                }
                if c.order_check && matches!(c.nonlinearity, NonlinearityConfig::Power { .. }) {
                    return Err(field_error(
                        "experiment.order_check",
                        "only for the exponential case",
                    ));
                }
                if let Some(s) = &c.delta_search {
                    if !(s.max_scale > 1.0) || s.steps == 0 {
                        return Err(field_error(
                            "experiment.delta_search",
                            "need max_scale > 1 and steps >= 1",
                        ));
                    }
                }
            }
            Experiment::Holder(c) => {
                let grid = self.grid_spec()?;
                build_window(grid.dim(), &grid).map_err(|e| field_error("grid", e))?;
                let p = c.target_p()?;
                let idx = ModIndex::new(p, c.q, c.s).map_err(|e| field_error("experiment.s", e))?;
                if !idx.is_admissible(grid.dim()) {
                    return Err(field_error("experiment.q", "(q, s) not admissible"));
                }
                if c.pairs == 0 {
                    return Err(field_error("experiment.pairs", "must be >= 1"));
                }
                self.check_band_limit(&grid, 2.0 * c.radius, "experiment.radius")?;
            }
            Experiment::Embedding(c) => {
                let grid = self.grid_spec()?;
                build_window(grid.dim(), &grid).map_err(|e| field_error("grid", e))?;
                for (field, idx) in [("experiment.from", &c.from), ("experiment.to", &c.to)] {
                    ModIndex::new(idx.p, idx.q, idx.s).map_err(|e| field_error(field, e))?;
                }
                if !embedding_holds(&c.from, &c.to, grid.dim()) {
                    return Err(field_error(
                        "experiment.to",
                        "index pair violates the embedding hypotheses",
                    ));
                }
                if c.samples == 0 {
                    return Err(field_error("experiment.samples", "must be >= 1"));
                }
                self.check_band_limit(&grid, c.radius, "experiment.radius")?;
            }
            Experiment::Kernel(c) => {
                if !(1..=3).contains(&c.d) {
                    return Err(field_error("experiment.d", "must be 1, 2 or 3"));
                }
                if c.m_values.is_empty() || c.m_values.contains(&0) {
                    return Err(field_error("experiment.m_values", "need powers >= 1"));
                }
                c.times.validate("experiment.times")?;
                if c.times.end < 10.0 * c.times.start.max(1.0) {
                    return Err(field_error("experiment.times", "need at least one decade"));
                }
            }
        }
        Ok(())
    }

    fn check_band_limit(
        &self,
        grid: &GridSpec,
        radius: f64,
        field: &str,
    ) -> Result<(), ConfigError> {
        if !(radius > 0.0) {
            return Err(field_error(field, "must be > 0"));
        }
        if radius >= grid.min_nyquist() {
            return Err(field_error(
                field,
                format!(
                    "band limit {radius} not resolved (nyquist {:.4})",
                    grid.min_nyquist()
                ),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DECAY: &str = r#"{
        "name": "t",
        "experiment": {"kind": "decay", "norm": "lebesgue", "p": 2,
            "times": {"start": 1, "end": 10, "count": 3, "spacing": "log"}},
        "grid": {"d": 1, "n": 256, "length": 200},
        "dispersion": {"alpha": 1, "gamma": 0.1},
        "data": {"kind": "gaussian", "width": 1}
    }"#;

    #[test]
    fn parses_and_validates() {
        let c = parse(DECAY, &[]).unwrap();
        c.validate().unwrap();
        assert_eq!(c.experiment.kind(), "decay");
    }

    #[test]
    fn missing_alpha_is_named() {
        let text = DECAY.replace(r#""alpha": 1, "#, "");
        let err = parse(&text, &[]).unwrap_err().to_string();
        assert!(err.contains("dispersion") && err.contains("alpha"), "{err}");
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let c = parse(DECAY, &["dispersion.gamma=0.5".into(), "name=other".into()]).unwrap();
        assert_eq!(c.dispersion.unwrap().gamma, 0.5);
        assert_eq!(c.name, "other");
        assert!(parse(DECAY, &["novalue".into()]).is_err());
    }

    #[test]
    fn inf_exponent_from_override() {
        let c = parse(DECAY, &["experiment.p=inf".into()]).unwrap();
        match c.experiment {
            Experiment::Decay(d) => assert!(d.p.is_infinite()),
            _ => unreachable!(),
        }
    }

    #[test]
    fn time_grids() {
        let g = TimeGrid {
            start: 0.1,
            end: 100.0,
            count: 4,
            spacing: Spacing::Log,
            include_zero: true,
        };
        let t = g.samples();
        assert_eq!(t.len(), 5);
        assert_eq!(t[0], 0.0);
        assert!((t[2] - 1.0).abs() < 1e-12);
        assert_eq!(t[4], 100.0);
    }

    #[test]
    fn lebesgue_scan_rejects_zero_time() {
        let c = parse(DECAY, &["experiment.times.include_zero=true".into()]).unwrap();
        assert!(c.validate().is_err());
    }
}
