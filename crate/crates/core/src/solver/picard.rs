use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::duhamel::{duhamel_spectra, SolutionSeries};
use super::nonlinearity::{apply_nonlinearity, exponential_tail_bound, Nonlinearity};
use crate::error::{Error, Result};
use crate::modulation::{modulation_norm, Defect, Window};
use crate::propagator::PropagatorPlan;
use crate::spectral::{
    gamma_exponent, m_zero, to_spectral, transform_in_place, ComplexField, Direction, ModIndex,
    Representation,
};

/// Number of consecutive non-contracting iterations that count as divergence.
pub const DIVERGENCE_STREAK: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Radius `R` of the ball `M(R)` in the weighted norm.
    pub radius: f64,
    /// Bound on the data norm `‖u₀‖_{M^s_{p',q}}`.
    pub delta: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Run powers at or below the threshold `m₀` (and the exponential case in
    /// `d = 1`) instead of rejecting them.
    #[serde(default)]
    pub allow_subcritical: bool,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("radius", self.radius),
            ("delta", self.delta),
            ("tol", self.tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(
                    "solver config",
                    format!("{what} = {v} must be > 0"),
                ));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::domain("solver config", "max_iter must be >= 1"));
        }
        Ok(())
    }
}

/// Weight exponent `2/γ_{m,d}` of the solution space for `spec`.
pub fn solution_weight(spec: &Nonlinearity, plan: &PropagatorPlan) -> Result<f64> {
    gamma_exponent(
        spec.effective_power(),
        plan.grid().dim(),
        plan.params().gamma_is_zero(),
    )
}

/// `(𝒯u)(t_i) = W(t_i)u₀ + i ∫_0^{t_i} W(t_i - τ) f(u(τ)) dτ`. The sign of the
/// equation lives in `f`.
pub fn picard_map(
    series: &SolutionSeries,
    u0: &ComplexField,
    spec: &Nonlinearity,
    plan: &PropagatorPlan,
) -> Result<SolutionSeries> {
    if u0.grid() != series.grid() || plan.grid() != series.grid() {
        return Err(Error::GridMismatch);
    }
    let times = series.times();
    let linear = to_spectral(u0)?.into_values();
    let integrals = nonlinear_spectra(series, spec, plan)?;
    let fields = integrals
        .into_par_iter()
        .zip(times.par_iter())
        .map(|(mut v, &t)| {
            for ((a, &l), &ph) in v.iter_mut().zip(&linear).zip(plan.phase()) {
                *a = Complex64::from_polar(1.0, ph * t) * l + Complex64::i() * *a;
            }
            transform_in_place(plan.grid(), &mut v, Direction::Inverse);
            ComplexField::new(plan.grid().clone(), v, Representation::Physical)
        })
        .collect::<Result<Vec<_>>>()?;
    SolutionSeries::new(times.to_vec(), fields)
}

fn nonlinear_spectra(
    series: &SolutionSeries,
    spec: &Nonlinearity,
    plan: &PropagatorPlan,
) -> Result<Vec<Vec<Complex64>>> {
    let n = plan.grid().len();
    if series.len() == 1 {
        return Ok(vec![vec![Complex64::new(0.0, 0.0); n]]);
    }
    let sources = series
        .fields()
        .par_iter()
        .map(|u| apply_nonlinearity(u, spec))
        .collect::<Result<Vec<_>>>()?;
    duhamel_spectra(&sources, series.times(), plan)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `‖u^{(n)} - u^{(n-1)}‖` in the weighted norm.
    pub residual: f64,
    /// `residual_n / residual_{n-1}`; absent for the first step.
    pub ratio: Option<f64>,
    /// Exponential nonlinearity only: bound on the dropped series tail at the
    /// current peak amplitude.
    pub tail_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOutcome {
    pub series: SolutionSeries,
    pub history: Vec<IterationRecord>,
    /// Weight exponent `α` of the norm `sup_t ⟨t⟩^α ‖u(t)‖_{M^s_{p,q}}`.
    pub alpha: f64,
    /// `‖u₀‖_{M^s_{p',q}}`.
    pub data_norm: f64,
    /// Weighted norm of the free evolution `W(·)u₀`.
    pub linear_norm: f64,
    /// Weighted norm of the fixed point.
    pub solution_norm: f64,
    /// Time where the weighted sup is attained.
    pub t_star: f64,
    /// Weighted norm of `u - W(·)u₀`, the nonlinear part.
    pub duhamel_norm: f64,
    /// Some iteration had an exponential tail bound above `tol`.
    pub tail_flagged: bool,
}

impl PicardOutcome {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn final_residual(&self) -> f64 {
        self.history.last().map_or(0.0, |r| r.residual)
    }
}

fn check_hypotheses(
    spec: &Nonlinearity,
    plan: &PropagatorPlan,
    idx: &ModIndex,
    config: &SolverConfig,
) -> Result<()> {
    config.validate()?;
    spec.validate()?;
    let d = plan.grid().dim();
    if !idx.is_admissible(d) {
        return Err(Error::domain(
            "modulation index",
            format!(
                "(q, s) = ({}, {}) is not admissible in d = {d}",
                idx.q, idx.s
            ),
        ));
    }
    if config.allow_subcritical {
        return Ok(());
    }
    match *spec {
        Nonlinearity::Power { m, .. } => {
            let m0 = m_zero(d, plan.params().gamma_is_zero());
            if (m as f64) <= m0 {
                return Err(Error::Subcritical { m, m0 });
            }
        }
        Nonlinearity::Exponential { .. } if d < 2 => {
            return Err(Error::domain(
                "nonlinearity",
                "the exponential case needs d >= 2",
            ));
        }
        _ => {}
    }
    Ok(())
}

/// Picard iteration `u^{(n+1)} = 𝒯u^{(n)}` from `u^{(0)} = W(·)u₀` until the
/// weighted-norm step is at most `tol`.
///
/// `idx` is the space the solution is measured in (`p = m + 2` in the
/// theory); data are measured in `M^s_{p',q}`.
pub fn picard_solve(
    u0: &ComplexField,
    spec: &Nonlinearity,
    plan: &PropagatorPlan,
    window: &Window,
    idx: &ModIndex,
    config: &SolverConfig,
    times: &[f64],
) -> Result<PicardOutcome> {
    picard_solve_observed(u0, spec, plan, window, idx, config, times, &mut |_| {})
}

/// [`picard_solve`], handing every iteration record to `observer` as it is
/// produced, so diagnostics survive a divergence error.
#[allow(clippy::too_many_arguments)]
pub fn picard_solve_observed(
    u0: &ComplexField,
    spec: &Nonlinearity,
    plan: &PropagatorPlan,
    window: &Window,
    idx: &ModIndex,
    config: &SolverConfig,
    times: &[f64],
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<PicardOutcome> {
    check_hypotheses(spec, plan, idx, config)?;
    if u0.grid() != plan.grid() || window.grid() != plan.grid() {
        return Err(Error::GridMismatch);
    }
    let alpha = solution_weight(spec, plan)?;
    let data_norm = modulation_norm(u0, &idx.with_p(idx.p.conjugate()), window)?;
    if data_norm > config.delta {
        return Err(Error::domain(
            "initial data",
            format!("norm {data_norm:.6e} exceeds delta = {:.6e}", config.delta),
        ));
    }
    let linear = SolutionSeries::linear(u0, times, plan)?;
    let linear_norm = linear.weighted_norm(idx, alpha, window)?.value;

    let mut current = linear.clone();
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut streak = 0;
    let mut tail_flagged = false;
    let converged = loop {
        let iteration = history.len() + 1;
        let next = picard_map(&current, u0, spec, plan)?;
        if !next.is_finite() {
            return Err(Error::Diverged {
                iteration,
                ratio: f64::INFINITY,
            });
        }
        let residual = next.sub(&current)?.weighted_norm(idx, alpha, window)?.value;
        let ratio = history.last().map(|prev| {
            if prev.residual > 0.0 {
                residual / prev.residual
            } else {
                0.0
            }
        });
        let tail_bound = match *spec {
            Nonlinearity::Exponential { lambda, rho, order } => {
                let peak = next
                    .fields()
                    .iter()
                    .map(ComplexField::max_abs)
                    .fold(0.0, f64::max);
                Some(exponential_tail_bound(lambda.norm(), rho, order, peak))
            }
            _ => None,
        };
        tail_flagged |= tail_bound.is_some_and(|b| b > config.tol);
        log::debug!("picard {iteration}: residual {residual:.3e}, ratio {ratio:?}");
        let record = IterationRecord {
            iteration,
            residual,
            ratio,
            tail_bound,
        };
        observer(&record);
        history.push(record);
        current = next;

        if !residual.is_finite() {
            return Err(Error::Diverged {
                iteration,
                ratio: f64::INFINITY,
            });
        }
        if residual <= config.tol {
            break true;
        }
        streak = match ratio {
            Some(r) if r >= 1.0 => streak + 1,
            _ => 0,
        };
        if streak >= DIVERGENCE_STREAK {
            return Err(Error::Diverged {
                iteration,
                ratio: ratio.unwrap_or(f64::INFINITY),
            });
        }
        if iteration >= config.max_iter {
            break false;
        }
    };
    if !converged {
        return Err(Error::NotConverged {
            iterations: history.len(),
            residual: history.last().map_or(f64::NAN, |r| r.residual),
        });
    }

    let sup = current.weighted_norm(idx, alpha, window)?;
    if sup.value > config.radius {
        return Err(Error::OutsideBall {
            norm: sup.value,
            radius: config.radius,
        });
    }
    let duhamel_norm = current
        .sub(&linear)?
        .weighted_norm(idx, alpha, window)?
        .value;
    Ok(PicardOutcome {
        series: current,
        history,
        alpha,
        data_norm,
        linear_norm,
        solution_norm: sup.value,
        t_star: sup.t_star,
        duhamel_norm,
        tail_flagged,
    })
}

/// `‖𝒯u - 𝒯v‖ / ‖u - v‖` in the weighted norm. Both series must lie in
/// `M(R)`; `u = v` is reported as degenerate.
pub fn contraction_ratio(
    u: &SolutionSeries,
    v: &SolutionSeries,
    spec: &Nonlinearity,
    plan: &PropagatorPlan,
    window: &Window,
    idx: &ModIndex,
    config: &SolverConfig,
) -> Result<Defect> {
    let alpha = solution_weight(spec, plan)?;
    for s in [u, v] {
        let norm = s.weighted_norm(idx, alpha, window)?.value;
        if norm > config.radius {
            return Err(Error::OutsideBall {
                norm,
                radius: config.radius,
            });
        }
    }
    let diff = u.sub(v)?.weighted_norm(idx, alpha, window)?.value;
    if diff == 0.0 {
        return Ok(Defect {
            ratio: 0.0,
            degenerate: true,
        });
    }
    // The free evolution cancels in 𝒯u - 𝒯v, so any u₀ will do.
    let zero = ComplexField::zeros(u.grid(), Representation::Physical);
    let tu = picard_map(u, &zero, spec, plan)?;
    let tv = picard_map(v, &zero, spec, plan)?;
    let num = tu.sub(&tv)?.weighted_norm(idx, alpha, window)?.value;
    Ok(Defect {
        ratio: num / diff,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::build_window;
    use crate::spectral::{DispersionParams, Exponent, GridSpec};

    fn setup() -> (PropagatorPlan, Window, ModIndex) {
        let g = GridSpec::cube(1, 64, 32.0).unwrap();
        let plan = PropagatorPlan::new(&g, DispersionParams::new(0.5, 0.0, 0.05).unwrap());
        let window = build_window(1, &g).unwrap();
        let idx = ModIndex::new(Exponent::new(7.0).unwrap(), Exponent::ONE, 0.0).unwrap();
        (plan, window, idx)
    }

    fn config() -> SolverConfig {
        SolverConfig {
            radius: 10.0,
            delta: 10.0,
            tol: 1e-10,
            max_iter: 30,
            allow_subcritical: false,
        }
    }

    fn times() -> Vec<f64> {
        (0..9).map(|i| i as f64 * 0.25).collect()
    }

    #[test]
    fn zero_data_converges_in_one_step() {
        let (plan, window, idx) = setup();
        let u0 = ComplexField::zeros(plan.grid(), Representation::Physical);
        let out = picard_solve(
            &u0,
            &Nonlinearity::power(5),
            &plan,
            &window,
            &idx,
            &config(),
            &times(),
        )
        .unwrap();
        assert_eq!(out.iterations(), 1);
        assert!(out.series.is_zero());
        assert_eq!(out.solution_norm, 0.0);
    }

    #[test]
    fn map_of_zero_is_free_flow() {
        let (plan, _, _) = setup();
        let u0 = ComplexField::from_fn(plan.grid(), |x| Complex64::new((-x[0] * x[0]).exp(), 0.0));
        let zero = SolutionSeries::zeros(plan.grid(), &times()).unwrap();
        let mapped = picard_map(&zero, &u0, &Nonlinearity::power(5), &plan).unwrap();
        let free = SolutionSeries::linear(&u0, &times(), &plan).unwrap();
        for (a, b) in mapped.fields().iter().zip(free.fields()) {
            assert!(a.sub(b).unwrap().max_abs() < 1e-14);
        }
    }

    #[test]
    fn overflowing_iterates_are_divergence() {
        let (plan, window, idx) = setup();
        let u0 = ComplexField::from_fn(plan.grid(), |x| {
            Complex64::new(1e60 * (-x[0] * x[0]).exp(), 0.0)
        });
        let permissive = SolverConfig {
            radius: 1e300,
            delta: 1e300,
            ..config()
        };
        let err = picard_solve(
            &u0,
            &Nonlinearity::power(5),
            &plan,
            &window,
            &idx,
            &permissive,
            &times(),
        );
        assert!(matches!(err, Err(Error::Diverged { .. })), "{err:?}");
    }

    #[test]
    fn subcritical_power_needs_override() {
        let (plan, window, idx) = setup();
        let u0 = ComplexField::zeros(plan.grid(), Representation::Physical);
        let err = picard_solve(
            &u0,
            &Nonlinearity::power(4),
            &plan,
            &window,
            &idx,
            &config(),
            &times(),
        );
        assert!(matches!(err, Err(Error::Subcritical { m: 4, .. })));
        let permissive = SolverConfig {
            allow_subcritical: true,
            ..config()
        };
        assert!(picard_solve(
            &u0,
            &Nonlinearity::power(4),
            &plan,
            &window,
            &idx,
            &permissive,
            &times()
        )
        .is_ok());
    }

    #[test]
    fn small_data_converges_and_is_a_fixed_point() {
        let (plan, window, idx) = setup();
        let u0 = ComplexField::from_fn(plan.grid(), |x| {
            Complex64::new(0.3 * (-x[0] * x[0] / 4.0).exp(), 0.0)
        });
        let spec = Nonlinearity::power(5);
        let out = picard_solve(&u0, &spec, &plan, &window, &idx, &config(), &times()).unwrap();
        assert!(out.final_residual() <= 1e-10);
        let again = picard_map(&out.series, &u0, &spec, &plan).unwrap();
        let alpha = out.alpha;
        let step = again
            .sub(&out.series)
            .unwrap()
            .weighted_norm(&idx, alpha, &window)
            .unwrap();
        assert!(step.value <= 1e-10);
    }

    #[test]
    fn large_data_is_rejected_by_delta() {
        let (plan, window, idx) = setup();
        let u0 = ComplexField::from_fn(plan.grid(), |x| {
            Complex64::new(5.0 * (-x[0] * x[0]).exp(), 0.0)
        });
        let cfg = SolverConfig {
            delta: 0.1,
            ..config()
        };
        let err = picard_solve(
            &u0,
            &Nonlinearity::power(5),
            &plan,
            &window,
            &idx,
            &cfg,
            &times(),
        );
        assert!(matches!(
            err,
            Err(Error::Domain {
                what: "initial data",
                ..
            })
        ));
    }

    #[test]
    fn contraction_ratio_of_identical_series_is_degenerate() {
        let (plan, window, idx) = setup();
        let u0 = ComplexField::from_fn(plan.grid(), |x| {
            Complex64::new(0.1 * (-x[0] * x[0]).exp(), 0.0)
        });
        let u = SolutionSeries::linear(&u0, &times(), &plan).unwrap();
        let r = contraction_ratio(
            &u,
            &u,
            &Nonlinearity::power(5),
            &plan,
            &window,
            &idx,
            &config(),
        )
        .unwrap();
        assert!(r.degenerate);
    }
}
