//! The five experiment families and the record each one produces.

use std::time::Instant;

use modspace_core::fields::BandLimited;
use modspace_core::modulation::{build_window, embedding_defect, holder_defect, Defect};
use modspace_core::propagator::{
    dispersive_scan, effective_spectral_radius, modulation_dispersive_scan, required_box_length,
    DecayReport, MARGIN_LIMIT,
};
use modspace_core::solver::{
    auto_order, bisect_threshold, kernel_tail_slope, max_admissible_radius, picard_solve,
    picard_solve_observed, power_kernel, selfmap_budget, EmpiricalConstants, IterationRecord,
    KernelTrend, Nonlinearity, PicardOutcome, SelfMapVerdict, SolutionSeries, SolverConfig,
};
use modspace_core::spectral::{
    gamma_exponent, kernel_integrable, m_zero, ComplexField, ConstantsReport, Exponent, GridSpec,
    ModIndex,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{
    ConfigError, DecayConfig, DecayNorm, EmbeddingConfig, ExistenceConfig, Experiment,
    ExperimentConfig, HolderConfig, KernelConfig, NonlinearityConfig, Setup,
};

/// Fraction of spectral mass ignored when sizing the box.
pub const BOX_TAIL: f64 = 1e-7;
/// Relative spread under refinement accepted as stable.
pub const REFINEMENT_LIMIT: f64 = 0.05;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("experiment invalid: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(modspace_core::Error),
    #[error("cannot write outputs: {0}")]
    Io(#[from] std::io::Error),
}

impl From<modspace_core::Error> for RunError {
    fn from(e: modspace_core::Error) -> Self {
        match e {
            modspace_core::Error::Invalid(msg) => RunError::Invalid(msg),
            other => RunError::Core(other),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Invalid(_) | RunError::Core(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Validity {
    /// Every sample kept its mass away from the box edge.
    pub margin_ok: Option<bool>,
    pub max_margin_mass: Option<f64>,
    /// Exponential series truncation below the tolerance throughout.
    pub truncation_ok: Option<bool>,
    pub max_tail_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Phase {
    pub phase: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub phases: Vec<Phase>,
}

struct Clock {
    start: Instant,
    last: Instant,
    phases: Vec<Phase>,
}

impl Clock {
    fn new() -> Self {
        let now = Instant::now();
        Clock {
            start: now,
            last: now,
            phases: Vec::new(),
        }
    }

    fn lap(&mut self, phase: &str) {
        let now = Instant::now();
        self.phases.push(Phase {
            phase: phase.to_string(),
            seconds: (now - self.last).as_secs_f64(),
        });
        self.last = now;
    }

    fn finish(self) -> Timings {
        Timings {
            total_seconds: self.start.elapsed().as_secs_f64(),
            phases: self.phases,
        }
    }
}

/// Row of the Hölder table.
#[derive(Debug, Clone, Serialize)]
pub struct HolderRow {
    pub pair: usize,
    pub seed_f: u64,
    pub seed_g: u64,
    pub ratio: f64,
    pub ratio_refined: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingRow {
    pub sample: usize,
    pub seed: u64,
    pub ratio: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelRow {
    pub m: u32,
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ExistencePayload {
    pub history: Vec<IterationRecord>,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub weighted: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum Payload {
    Decay(DecayReport),
    Existence(ExistencePayload),
    Holder(Vec<HolderRow>),
    Embedding(Vec<EmbeddingRow>),
    Kernel(Vec<KernelRow>),
}

#[derive(Debug, Clone, Serialize)]
pub struct BoxRule {
    pub spectral_radius: f64,
    pub required_length: f64,
    pub length: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecaySummary {
    pub mu: f64,
    pub predicted_slope: f64,
    pub fitted_slope: Option<f64>,
    pub fit_window: Option<(f64, f64)>,
    pub reference_norm: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `ratio_max / ratio_min` over valid samples.
    pub ratio_spread: f64,
    pub valid_samples: usize,
    pub samples: usize,
    pub box_rule: BoxRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExistenceOutcome {
    ConvergedInBall,
    Diverged,
    NotConverged,
    LeftBall,
    Overflow,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaEstimate {
    /// Largest data scale seen to converge.
    pub scale_converged: f64,
    /// Smallest data scale seen to fail; absent when every probe converged.
    pub scale_failed: Option<f64>,
    pub data_norm_converged: f64,
    pub probes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExistenceSummary {
    pub outcome: ExistenceOutcome,
    pub detail: Option<String>,
    pub m: u32,
    pub series_order: Option<usize>,
    pub alpha: f64,
    pub radius: f64,
    pub delta: Option<f64>,
    pub data_norm: Option<f64>,
    pub linear_norm: f64,
    pub solution_norm: Option<f64>,
    pub t_star: Option<f64>,
    pub iterations: usize,
    pub final_residual: Option<f64>,
    pub max_contraction_ratio: Option<f64>,
    pub residual_monotone: bool,
    pub empirical_constants: Option<EmpiricalConstants>,
    pub selfmap: Option<SelfMapVerdict>,
    pub admissible_radius: Option<f64>,
    /// Weighted-norm change of the fixed point when the time step is halved.
    pub quadrature_delta: Option<f64>,
    /// Weighted-norm change of the fixed point when the series order doubles.
    pub order_delta: Option<f64>,
    pub order_delta_ok: Option<bool>,
    pub empirical_delta: Option<DeltaEstimate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanSummary {
    pub count: usize,
    pub degenerate: usize,
    pub max_ratio: f64,
    pub argmax: usize,
    pub min_ratio: f64,
    pub max_ratio_refined: Option<f64>,
    /// `|max_refined / max - 1|`.
    pub refinement_delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelEntry {
    pub m: u32,
    pub sup: f64,
    pub final_value: f64,
    /// `log10 I(t_end) / I(t_end / 10)`.
    pub tail_slope: f64,
    pub trend: KernelTrend,
    pub above_threshold: bool,
    pub integrable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelSummary {
    pub d: usize,
    pub gamma_zero: bool,
    pub m0: f64,
    pub entries: Vec<KernelEntry>,
    /// Largest divergent `m` and the next `m`, when the trend flips once.
    pub flip: Option<(u32, u32)>,
    pub flip_brackets_m0: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Summary {
    Decay(DecaySummary),
    Existence(Box<ExistenceSummary>),
    Scan(ScanSummary),
    Kernel(KernelSummary),
}

/// Result of one run. `payload` and `timings` are written to their own files;
/// the rest is `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub schema: String,
    pub config: ExperimentConfig,
    pub constants: Option<ConstantsReport>,
    pub validity: Validity,
    pub verdict: String,
    pub summary: Summary,
    #[serde(skip)]
    pub payload: Payload,
    #[serde(skip)]
    pub timings: Timings,
}

impl ResultRecord {
    /// 0 on success, 4 for a non-converged existence run that the config did
    /// not permit.
    pub fn exit_code(&self) -> i32 {
        match (&self.config.experiment, &self.summary) {
            (Experiment::Existence(c), Summary::Existence(s))
                if s.outcome != ExistenceOutcome::ConvergedInBall && !c.allow_divergence =>
            {
                4
            }
            _ => 0,
        }
    }
}

struct Parts {
    constants: Option<ConstantsReport>,
    validity: Validity,
    verdict: String,
    summary: Summary,
    payload: Payload,
}

/// Validate and run one experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultRecord, RunError> {
    config.validate()?;
    let mut clock = Clock::new();
    let parts = match &config.experiment {
        Experiment::Decay(c) => run_decay(config, c, &mut clock)?,
        Experiment::Existence(c) => run_existence(config, c, &mut clock)?,
        Experiment::Holder(c) => run_holder(config, c, &mut clock)?,
        Experiment::Embedding(c) => run_embedding(config, c, &mut clock)?,
        Experiment::Kernel(c) => run_kernel(c, &mut clock)?,
    };
    Ok(ResultRecord {
        schema: crate::output::schema_id("result"),
        config: config.clone(),
        constants: parts.constants,
        validity: parts.validity,
        verdict: parts.verdict,
        summary: parts.summary,
        payload: parts.payload,
        timings: clock.finish(),
    })
}

/// Spectral radius, required box length and whether the grid meets it.
pub fn box_rule(setup: &Setup, t_max: f64) -> Result<BoxRule, RunError> {
    let spectral_radius = effective_spectral_radius(&setup.data, BOX_TAIL)?;
    let required_length = required_box_length(&setup.plan, spectral_radius, t_max);
    let length = setup
        .grid
        .lengths()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(BoxRule {
        spectral_radius,
        required_length,
        length,
        satisfied: length >= required_length,
    })
}

fn box_error(rule: &BoxRule) -> ConfigError {
    ConfigError::Field {
        field: "grid.length".into(),
        message: format!(
            "box length {} below the required {:.4} (spectral radius {:.4})",
            rule.length, rule.required_length, rule.spectral_radius
        ),
    }
}

fn run_decay(
    config: &ExperimentConfig,
    c: &DecayConfig,
    clock: &mut Clock,
) -> Result<Parts, RunError> {
    let setup = config.setup()?;
    let times = c.times.samples();
    let rule = box_rule(&setup, c.times.end)?;
    if c.enforce_box_rule && !rule.satisfied {
        return Err(box_error(&rule).into());
    }
    clock.lap("setup");
    let report = match c.norm {
        DecayNorm::Lebesgue => dispersive_scan(&setup.data, c.p, &times, &setup.plan)?,
        DecayNorm::Modulation => {
            let idx = ModIndex::new(c.p, c.q, c.s)?;
            modulation_dispersive_scan(&setup.data, &idx, &times, &setup.plan, &setup.window)?
        }
    };
    clock.lap("scan");

    let valid = report.valid_ratios();
    let ratio_min = valid.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio_max = valid.iter().copied().fold(0.0, f64::max);
    let verdict = decay_verdict(report.mu, report.fitted_slope);
    let max_margin = report.margin_mass.iter().copied().fold(0.0, f64::max);
    let summary = DecaySummary {
        mu: report.mu,
        predicted_slope: -report.mu,
        fitted_slope: report.fitted_slope,
        fit_window: report.fit_window,
        reference_norm: report.reference_norm,
        ratio_min,
        ratio_max,
        ratio_spread: ratio_max / ratio_min,
        valid_samples: valid.len(),
        samples: report.times.len(),
        box_rule: rule,
    };
    Ok(Parts {
        constants: None,
        validity: Validity {
            margin_ok: Some(report.valid.iter().all(|&v| v)),
            max_margin_mass: Some(max_margin),
            ..Validity::default()
        },
        verdict: verdict.to_string(),
        summary: Summary::Decay(summary),
        payload: Payload::Decay(report),
    })
}

/// `flat` for `μ = 0`, otherwise the fitted slope against `-μ` with a 15%
/// band.
pub fn decay_verdict(mu: f64, slope: Option<f64>) -> &'static str {
    let Some(slope) = slope else {
        return "insufficient_data";
    };
    if mu == 0.0 {
        return if slope.abs() <= 0.02 {
            "flat"
        } else {
            "drifting"
        };
    }
    if slope < -1.15 * mu {
        "faster_than_predicted"
    } else if slope > -0.85 * mu {
        "slower_than_predicted"
    } else {
        "consistent"
    }
}

/// Everything fixed for an existence run at one data scale.
struct ExistenceProblem<'a> {
    setup: &'a Setup,
    c: &'a ExistenceConfig,
    idx: ModIndex,
    alpha: f64,
    times: Vec<f64>,
}

impl ExistenceProblem<'_> {
    /// Radius: configured, else `radius_factor` times the free-flow norm.
    fn radius(&self, linear_norm: f64) -> f64 {
        match self.c.radius {
            Some(r) => r,
            None if linear_norm > 0.0 => self.c.radius_factor * linear_norm,
            None => 1.0,
        }
    }

    fn nonlinearity(&self, radius: f64) -> Nonlinearity {
        let order = match self.c.nonlinearity {
            NonlinearityConfig::Exponential { lambda, rho, .. } => auto_order(
                Complex64::new(lambda[0], lambda[1]).norm(),
                rho,
                radius,
                self.c.tol,
            ),
            NonlinearityConfig::Power { .. } => 1,
        };
        self.c.nonlinearity.resolve(order)
    }

    fn solver(&self, radius: f64) -> SolverConfig {
        SolverConfig {
            radius,
            delta: self.c.delta.unwrap_or(f64::MAX),
            tol: self.c.tol,
            max_iter: self.c.max_iter,
            allow_subcritical: self.c.allow_subcritical,
        }
    }

    fn linear_norm(&self, u0: &ComplexField, times: &[f64]) -> Result<f64, RunError> {
        let linear = SolutionSeries::linear(u0, times, &self.setup.plan)?;
        Ok(linear
            .weighted_norm(&self.idx, self.alpha, &self.setup.window)?
            .value)
    }

    fn solve(
        &self,
        u0: &ComplexField,
        spec: &Nonlinearity,
        radius: f64,
        times: &[f64],
    ) -> modspace_core::Result<PicardOutcome> {
        let s = self.setup;
        picard_solve(
            u0,
            spec,
            &s.plan,
            &s.window,
            &self.idx,
            &self.solver(radius),
            times,
        )
    }
}

fn uniform_times(t_max: f64, nodes: usize) -> Vec<f64> {
    let mut times: Vec<f64> = (0..nodes)
        .map(|i| t_max * i as f64 / (nodes - 1) as f64)
        .collect();
    times[nodes - 1] = t_max;
    times
}

fn classify(err: &modspace_core::Error) -> Option<ExistenceOutcome> {
    use modspace_core::Error as E;
    match err {
        E::Diverged { .. } => Some(ExistenceOutcome::Diverged),
        E::NotConverged { .. } => Some(ExistenceOutcome::NotConverged),
        E::OutsideBall { .. } => Some(ExistenceOutcome::LeftBall),
        E::Overflow { .. } => Some(ExistenceOutcome::Overflow),
        _ => None,
    }
}

fn run_existence(
    config: &ExperimentConfig,
    c: &ExistenceConfig,
    clock: &mut Clock,
) -> Result<Parts, RunError> {
    let setup = config.setup()?;
    let d = setup.grid.dim();
    let gamma_zero = setup.plan.params().gamma_is_zero();
    let m = c.nonlinearity.effective_power();
    let p = Exponent::new(m as f64 + 2.0)?;
    let problem = ExistenceProblem {
        setup: &setup,
        c,
        idx: ModIndex::new(p, c.q, c.s)?,
        alpha: gamma_exponent(m, d, gamma_zero)?,
        times: uniform_times(c.t_max, c.nodes),
    };
    let constants = ConstantsReport::new(d, gamma_zero, m, p)?;
    let rule = box_rule(&setup, c.t_max)?;
    if !rule.satisfied {
        log::warn!(
            "box length {} below {:.4}; periodic wrap-around may affect the run",
            rule.length,
            rule.required_length
        );
    }
    let linear_norm = problem.linear_norm(&setup.data, &problem.times)?;
    let radius = problem.radius(linear_norm);
    let spec = problem.nonlinearity(radius);
    let order = match spec {
        Nonlinearity::Exponential { order, .. } => Some(order),
        Nonlinearity::Power { .. } => None,
    };
    clock.lap("setup");

    let mut history = Vec::new();
    let result = picard_solve_observed(
        &setup.data,
        &spec,
        &setup.plan,
        &setup.window,
        &problem.idx,
        &problem.solver(radius),
        &problem.times,
        &mut |r| history.push(r.clone()),
    );
    clock.lap("picard");

    let max_tail = history
        .iter()
        .filter_map(|r| r.tail_bound)
        .fold(None, |acc: Option<f64>, b| {
            Some(acc.map_or(b, |a| a.max(b)))
        });
    let mut summary = ExistenceSummary {
        outcome: ExistenceOutcome::ConvergedInBall,
        detail: None,
        m,
        series_order: order,
        alpha: problem.alpha,
        radius,
        delta: c.delta,
        data_norm: None,
        linear_norm,
        solution_norm: None,
        t_star: None,
        iterations: history.len(),
        final_residual: history.last().map(|r| r.residual),
        max_contraction_ratio: history.iter().filter_map(|r| r.ratio).reduce(f64::max),
        residual_monotone: history.windows(2).all(|w| w[1].residual < w[0].residual),
        empirical_constants: None,
        selfmap: None,
        admissible_radius: None,
        quadrature_delta: None,
        order_delta: None,
        order_delta_ok: None,
        empirical_delta: None,
    };
    let mut validity = Validity {
        truncation_ok: max_tail.map(|b| b <= c.tol),
        max_tail_bound: max_tail,
        ..Validity::default()
    };
    let mut payload = ExistencePayload {
        history,
        ..ExistencePayload::default()
    };

    let outcome = match result {
        Ok(outcome) => outcome,
        Err(err) => {
            let kind = classify(&err).ok_or_else(|| RunError::from(err.clone()))?;
            log::warn!("{}: {err}", config.name);
            summary.outcome = kind;
            summary.detail = Some(err.to_string());
            return Ok(Parts {
                constants: Some(constants),
                validity,
                verdict: serde_json::to_value(kind)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                summary: Summary::Existence(Box::new(summary)),
                payload: Payload::Existence(payload),
            });
        }
    };

    let norms = outcome
        .series
        .modulation_norms(&problem.idx, &setup.window)?;
    payload.weighted = problem
        .times
        .iter()
        .zip(&norms)
        .map(|(t, n)| (1.0 + t.abs()).powf(problem.alpha) * n)
        .collect();
    payload.times = problem.times.clone();
    payload.norms = norms;
    let mut max_margin = 0.0_f64;
    for u in outcome.series.fields() {
        max_margin = max_margin.max(u.margin_mass()?);
    }
    validity.margin_ok = Some(max_margin <= MARGIN_LIMIT);
    validity.max_margin_mass = Some(max_margin);

    summary.data_norm = Some(outcome.data_norm);
    summary.solution_norm = Some(outcome.solution_norm);
    summary.t_star = Some(outcome.t_star);
    if let Some(k) = EmpiricalConstants::measure(&outcome, &spec) {
        summary.selfmap = Some(selfmap_budget(outcome.data_norm, radius, &spec, &k));
        summary.admissible_radius =
            max_admissible_radius(outcome.data_norm, &spec, &k, 1e3 * radius);
        summary.empirical_constants = Some(k);
    }
    clock.lap("diagnostics");

    if c.quadrature_check {
        summary.quadrature_delta = quadrature_delta(&problem, &spec, radius, &outcome);
        clock.lap("quadrature_check");
    }
    if c.order_check {
        if let Nonlinearity::Exponential { lambda, rho, order } = spec {
            let doubled = Nonlinearity::Exponential {
                lambda,
                rho,
                order: 2 * order,
            };
            summary.order_delta = match problem.solve(&setup.data, &doubled, radius, &problem.times)
            {
                Ok(other) => Some(
                    other
                        .series
                        .sub(&outcome.series)?
                        .weighted_norm(&problem.idx, problem.alpha, &setup.window)?
                        .value,
                ),
                Err(err) => {
                    log::warn!("order check run failed: {err}");
                    None
                }
            };
            summary.order_delta_ok = summary.order_delta.map(|v| v <= 4.0 * c.tol);
        }
        clock.lap("order_check");
    }
    if let Some(search) = &c.delta_search {
        summary.empirical_delta = Some(delta_search(
            &problem,
            search.max_scale,
            search.steps,
            outcome.data_norm,
        )?);
        clock.lap("delta_search");
    }

    Ok(Parts {
        constants: Some(constants),
        validity,
        verdict: "converged_in_ball".into(),
        summary: Summary::Existence(Box::new(summary)),
        payload: Payload::Existence(payload),
    })
}

/// Rerun on the grid with every step halved and compare on the shared nodes.
fn quadrature_delta(
    problem: &ExistenceProblem,
    spec: &Nonlinearity,
    radius: f64,
    outcome: &PicardOutcome,
) -> Option<f64> {
    let fine_times = uniform_times(problem.c.t_max, 2 * problem.c.nodes - 1);
    let fine = match problem.solve(&problem.setup.data, spec, radius, &fine_times) {
        Ok(fine) => fine,
        Err(err) => {
            log::warn!("quadrature check run failed: {err}");
            return None;
        }
    };
    let shared: Vec<ComplexField> = fine.series.fields().iter().step_by(2).cloned().collect();
    let compare = || -> modspace_core::Result<f64> {
        let coarse_on_fine = SolutionSeries::new(problem.times.clone(), shared)?;
        Ok(coarse_on_fine
            .sub(&outcome.series)?
            .weighted_norm(&problem.idx, problem.alpha, &problem.setup.window)?
            .value)
    };
    compare().ok()
}

/// Bisect the data scale between the configured data (scale 1) and
/// `max_scale` for the convergence boundary.
fn delta_search(
    problem: &ExistenceProblem,
    max_scale: f64,
    steps: usize,
    data_norm: f64,
) -> Result<DeltaEstimate, RunError> {
    let mut probes = 0;
    let mut failure: Option<RunError> = None;
    let mut converges = |scale: f64| -> bool {
        probes += 1;
        let u0 = problem.setup.data.scale(Complex64::new(scale, 0.0));
        let attempt = || -> Result<bool, RunError> {
            let radius = problem.radius(problem.linear_norm(&u0, &problem.times)?);
            let spec = problem.nonlinearity(radius);
            match problem.solve(&u0, &spec, radius, &problem.times) {
                Ok(_) => Ok(true),
                Err(e) if classify(&e).is_some() => Ok(false),
                Err(e) => Err(e.into()),
            }
        };
        attempt().unwrap_or_else(|e| {
            failure.get_or_insert(e);
            false
        })
    };
    let estimate = if converges(max_scale) {
        DeltaEstimate {
            scale_converged: max_scale,
            scale_failed: None,
            data_norm_converged: max_scale * data_norm,
            probes: 0,
        }
    } else {
        let (lo, hi) = bisect_threshold(1.0, max_scale, steps, &mut converges);
        DeltaEstimate {
            scale_converged: lo,
            scale_failed: Some(hi),
            data_norm_converged: lo * data_norm,
            probes: 0,
        }
    };
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(DeltaEstimate { probes, ..estimate })
}

fn scan_summary(ratios: &[f64], degenerate: usize, refined: Option<Vec<f64>>) -> ScanSummary {
    let (argmax, max_ratio) =
        ratios
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, r)| {
                if r > best.1 {
                    (i, r)
                } else {
                    best
                }
            });
    let max_ratio_refined = refined.map(|r| r.into_iter().fold(f64::NEG_INFINITY, f64::max));
    ScanSummary {
        count: ratios.len(),
        degenerate,
        max_ratio,
        argmax,
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max_ratio_refined,
        refinement_delta: max_ratio_refined.map(|fine| (fine / max_ratio - 1.0).abs()),
    }
}

fn scan_verdict(s: &ScanSummary) -> &'static str {
    if !s.max_ratio.is_finite() {
        "unbounded"
    } else if s.refinement_delta.is_some_and(|d| d >= REFINEMENT_LIMIT) {
        "unstable_under_refinement"
    } else {
        "bounded"
    }
}

fn refined_grid(grid: &GridSpec) -> Result<GridSpec, RunError> {
    let points: Vec<usize> = grid.points().iter().map(|n| 2 * n).collect();
    Ok(GridSpec::new(&points, grid.lengths())?)
}

fn run_holder(
    config: &ExperimentConfig,
    c: &HolderConfig,
    clock: &mut Clock,
) -> Result<Parts, RunError> {
    let grid = config.grid_spec()?;
    let window = build_window(grid.dim(), &grid)?;
    let idx = ModIndex::new(c.target_p()?, c.q, c.s)?;
    let fine = if c.refine {
        let g = refined_grid(&grid)?;
        let w = build_window(g.dim(), &g)?;
        Some((g, w))
    } else {
        None
    };
    let field = |seed: u64, grid: &GridSpec| {
        BandLimited {
            radius: c.radius,
            seed,
            amplitude: 1.0,
        }
        .sample(grid)
    };
    let rows = (0..c.pairs)
        .into_par_iter()
        .map(|pair| -> modspace_core::Result<HolderRow> {
            let seed_f = config.seed.wrapping_add(2 * pair as u64);
            let seed_g = seed_f.wrapping_add(1);
            let coarse = holder_defect(
                &field(seed_f, &grid)?,
                &field(seed_g, &grid)?,
                c.p1,
                c.p2,
                &idx,
                &window,
            )?;
            let refined = match &fine {
                Some((g, w)) => Some(
                    holder_defect(&field(seed_f, g)?, &field(seed_g, g)?, c.p1, c.p2, &idx, w)?
                        .ratio,
                ),
                None => None,
            };
            Ok(HolderRow {
                pair,
                seed_f,
                seed_g,
                ratio: coarse.ratio,
                ratio_refined: refined,
                degenerate: coarse.degenerate,
            })
        })
        .collect::<modspace_core::Result<Vec<_>>>()?;
    clock.lap("scan");
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let refined = c
        .refine
        .then(|| rows.iter().filter_map(|r| r.ratio_refined).collect());
    let degenerate = rows.iter().filter(|r| r.degenerate).count();
    let summary = scan_summary(&ratios, degenerate, refined);
    Ok(Parts {
        constants: None,
        validity: Validity::default(),
        verdict: scan_verdict(&summary).into(),
        summary: Summary::Scan(summary),
        payload: Payload::Holder(rows),
    })
}

fn run_embedding(
    config: &ExperimentConfig,
    c: &EmbeddingConfig,
    clock: &mut Clock,
) -> Result<Parts, RunError> {
    let grid = config.grid_spec()?;
    let window = build_window(grid.dim(), &grid)?;
    let rows = (0..c.samples)
        .into_par_iter()
        .map(|sample| -> modspace_core::Result<EmbeddingRow> {
            let seed = config.seed.wrapping_add(sample as u64);
            let f = BandLimited {
                radius: c.radius,
                seed,
                amplitude: 1.0,
            }
            .sample(&grid)?;
            let Defect { ratio, degenerate } = embedding_defect(&f, &c.from, &c.to, &window)?;
            Ok(EmbeddingRow {
                sample,
                seed,
                ratio,
                degenerate,
            })
        })
        .collect::<modspace_core::Result<Vec<_>>>()?;
    clock.lap("scan");
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let degenerate = rows.iter().filter(|r| r.degenerate).count();
    let summary = scan_summary(&ratios, degenerate, None);
    Ok(Parts {
        constants: None,
        validity: Validity::default(),
        verdict: scan_verdict(&summary).into(),
        summary: Summary::Scan(summary),
        payload: Payload::Embedding(rows),
    })
}

fn run_kernel(c: &KernelConfig, clock: &mut Clock) -> Result<Parts, RunError> {
    let times = c.times.samples();
    let t_end = c.times.end;
    let jobs: Vec<(u32, f64)> = c
        .m_values
        .iter()
        .flat_map(|&m| times.iter().map(move |&t| (m, t)))
        .collect();
    let rows = jobs
        .into_par_iter()
        .map(|(m, t)| {
            Ok(KernelRow {
                m,
                t,
                value: power_kernel(m, c.d, c.gamma_zero, t)?,
            })
        })
        .collect::<modspace_core::Result<Vec<_>>>()?;
    let m0 = m_zero(c.d, c.gamma_zero);
    let mut entries = Vec::with_capacity(c.m_values.len());
    for &m in &c.m_values {
        let values: Vec<f64> = rows.iter().filter(|r| r.m == m).map(|r| r.value).collect();
        let tail_slope = kernel_tail_slope(m, c.d, c.gamma_zero, t_end)?;
        entries.push(KernelEntry {
            m,
            sup: values.iter().copied().fold(0.0, f64::max),
            final_value: values.last().copied().unwrap_or(0.0),
            tail_slope,
            trend: if tail_slope >= c.slope_limit {
                KernelTrend::Divergent
            } else {
                KernelTrend::Finite
            },
            above_threshold: m as f64 > m0,
            integrable: kernel_integrable(m, c.d, c.gamma_zero)?,
        });
    }
    clock.lap("quadrature");

    let flip = kernel_flip(&entries);
    let flip_brackets_m0 = flip.map(|(lo, hi)| (lo as f64) < m0 && m0 < hi as f64);
    let verdict = match flip_brackets_m0 {
        Some(true) => "flip_consistent",
        Some(false) => "flip_inconsistent",
        None => "no_single_flip",
    };
    Ok(Parts {
        constants: None,
        validity: Validity::default(),
        verdict: verdict.into(),
        summary: Summary::Kernel(KernelSummary {
            d: c.d,
            gamma_zero: c.gamma_zero,
            m0,
            entries,
            flip,
            flip_brackets_m0,
        }),
        payload: Payload::Kernel(rows),
    })
}

/// The single divergent-to-finite transition in increasing `m`, if the trend
/// changes exactly once.
pub fn kernel_flip(entries: &[KernelEntry]) -> Option<(u32, u32)> {
    let mut sorted: Vec<&KernelEntry> = entries.iter().collect();
    sorted.sort_by_key(|e| e.m);
    let changes: Vec<(u32, u32)> = sorted
        .windows(2)
        .filter(|w| w[0].trend != w[1].trend)
        .map(|w| (w[0].m, w[1].m))
        .collect();
    match changes.as_slice() {
        [(lo, hi)] if sorted[0].trend == KernelTrend::Divergent => Some((*lo, *hi)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_verdicts() {
        assert_eq!(decay_verdict(0.0, Some(0.01)), "flat");
        assert_eq!(decay_verdict(0.0, Some(0.1)), "drifting");
        assert_eq!(decay_verdict(0.25, Some(-0.24)), "consistent");
        assert_eq!(decay_verdict(0.25, Some(-0.5)), "faster_than_predicted");
        assert_eq!(decay_verdict(0.25, Some(-0.1)), "slower_than_predicted");
        assert_eq!(decay_verdict(0.25, None), "insufficient_data");
    }

    fn entry(m: u32, trend: KernelTrend) -> KernelEntry {
        KernelEntry {
            m,
            sup: 1.0,
            final_value: 1.0,
            tail_slope: 0.0,
            trend,
            above_threshold: false,
            integrable: true,
        }
    }

    #[test]
    fn single_flip_is_found() {
        use KernelTrend::*;
        let e = [
            entry(2, Divergent),
            entry(1, Divergent),
            entry(3, Finite),
            entry(4, Finite),
        ];
        assert_eq!(kernel_flip(&e), Some((2, 3)));
        let twice = [entry(1, Divergent), entry(2, Finite), entry(3, Divergent)];
        assert_eq!(kernel_flip(&twice), None);
        assert_eq!(kernel_flip(&[entry(1, Finite), entry(2, Finite)]), None);
    }

    #[test]
    fn uniform_times_hit_endpoint() {
        let t = uniform_times(50.0, 200);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[199], 50.0);
        assert!((t[1] - 50.0 / 199.0).abs() < 1e-15);
    }

    #[test]
    fn scan_summary_reports_refinement() {
        let s = scan_summary(&[1.0, 3.0, 2.0], 0, Some(vec![1.0, 3.06, 2.0]));
        assert_eq!(s.argmax, 1);
        assert_eq!(s.max_ratio, 3.0);
        assert!((s.refinement_delta.unwrap() - 0.02).abs() < 1e-12);
        assert_eq!(scan_verdict(&s), "bounded");
    }
}
