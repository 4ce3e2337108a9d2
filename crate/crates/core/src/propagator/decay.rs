use rayon::prelude::*;
use serde::Serialize;

use super::PropagatorPlan;
use crate::error::{Error, Result};
use crate::modulation::{modulation_norm, Window};
use crate::spectral::{
    lp_norm, mu, to_spectral, transform_in_place, ComplexField, Direction, Exponent, ModIndex,
    Representation,
};

/// A sample is valid while the outer 10% shell holds less than this fraction
/// of the mass.
pub const MARGIN_LIMIT: f64 = 1e-6;
/// Initial data must be at least this well contained.
pub const INITIAL_MARGIN_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub times: Vec<f64>,
    pub raw_norms: Vec<f64>,
    /// Time-compensated ratios, `|t|^μ` for the Lebesgue scan and `⟨t⟩^μ`
    /// for the modulation scan, divided by the norm of the data.
    pub ratios: Vec<f64>,
    pub margin_mass: Vec<f64>,
    pub valid: Vec<bool>,
    pub mu: f64,
    /// `‖f‖_{p'}` or `‖f‖_{M^s_{p',q}}`.
    pub reference_norm: f64,
    /// Least-squares slope of `log raw_norm` against `log t`.
    pub fitted_slope: Option<f64>,
    pub fit_window: Option<(f64, f64)>,
}

impl DecayReport {
    fn finish(mut self) -> Result<Self> {
        if !self.valid.iter().any(|&v| v) {
            return Err(Error::Invalid(format!(
                "every sample breached the margin limit {MARGIN_LIMIT:e}"
            )));
        }
        let (slope, window) = fit_last_decade(&self.times, &self.raw_norms, &self.valid);
        self.fitted_slope = slope;
        self.fit_window = window;
        Ok(self)
    }

    /// Ratios restricted to margin-valid samples.
    pub fn valid_ratios(&self) -> Vec<f64> {
        self.ratios
            .iter()
            .zip(&self.valid)
            .filter(|(_, &v)| v)
            .map(|(r, _)| *r)
            .collect()
    }
}

/// Ordinary least squares slope of `ln y` against `ln x`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Fit over the last decade of valid positive times.
fn fit_last_decade(
    times: &[f64],
    norms: &[f64],
    valid: &[bool],
) -> (Option<f64>, Option<(f64, f64)>) {
    let t_end = times
        .iter()
        .zip(valid)
        .filter(|(t, &v)| v && **t > 0.0)
        .map(|(t, _)| *t)
        .fold(f64::NEG_INFINITY, f64::max);
    if !t_end.is_finite() {
        return (None, None);
    }
    let t_start = t_end / 10.0;
    let (xs, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(norms)
        .zip(valid)
        .filter(|((t, _), &v)| v && **t >= t_start * (1.0 - 1e-12) && **t > 0.0)
        .map(|((t, n), _)| (*t, *n))
        .unzip();
    let first = xs.first().copied().unwrap_or(t_end);
    (fit_loglog_slope(&xs, &ys), Some((first, t_end)))
}

fn initial_margin(f: &ComplexField) -> Result<ComplexField> {
    let physical = crate::spectral::to_physical(f)?;
    let margin = physical.margin_mass()?;
    if margin > INITIAL_MARGIN_LIMIT {
        return Err(Error::Invalid(format!(
            "initial margin mass {margin:.3e} exceeds {INITIAL_MARGIN_LIMIT:e}"
        )));
    }
    Ok(physical)
}

/// Evolve the data to each requested time, in parallel, and hand the
/// physical field to `measure`. Results keep the order of `times`.
fn evolve_and_measure<T: Send>(
    f: &ComplexField,
    times: &[f64],
    plan: &PropagatorPlan,
    measure: impl Fn(&ComplexField) -> Result<T> + Sync,
) -> Result<Vec<(T, f64)>> {
    if f.grid() != plan.grid() {
        return Err(Error::GridMismatch);
    }
    let spectrum = to_spectral(f)?.into_values();
    times
        .par_iter()
        .map(|&t| {
            let mut values = spectrum.clone();
            plan.apply_to_spectrum(&mut values, t);
            transform_in_place(plan.grid(), &mut values, Direction::Inverse);
            let field = ComplexField::new(plan.grid().clone(), values, Representation::Physical)?;
            Ok((measure(&field)?, field.margin_mass()?))
        })
        .collect()
}

/// `L^{p'} → L^p` decay scan: raw `‖W(t)f‖_p` and `|t|^μ ‖W(t)f‖_p / ‖f‖_{p'}`.
pub fn dispersive_scan(
    f: &ComplexField,
    p: Exponent,
    times: &[f64],
    plan: &PropagatorPlan,
) -> Result<DecayReport> {
    let d = plan.grid().dim();
    let mu = mu(d, plan.params().gamma_is_zero(), p)?;
    if times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::domain("scan times", "|t|^-mu scans need t > 0"));
    }
    let physical = initial_margin(f)?;
    let reference_norm = lp_norm(&physical, p.conjugate())?;
    if reference_norm == 0.0 {
        return Err(Error::domain("decay data", "zero field"));
    }
    let samples = evolve_and_measure(&physical, times, plan, |u| lp_norm(u, p))?;
    build_report(times, samples, mu, reference_norm, |t| t.abs().powf(mu))
}

/// Modulation-space decay scan: `⟨t⟩^μ ‖W(t)f‖_{M^s_{p,q}} / ‖f‖_{M^s_{p',q}}`.
/// `t = 0` is allowed.
pub fn modulation_dispersive_scan(
    f: &ComplexField,
    idx: &ModIndex,
    times: &[f64],
    plan: &PropagatorPlan,
    window: &Window,
) -> Result<DecayReport> {
    let d = plan.grid().dim();
    let mu = mu(d, plan.params().gamma_is_zero(), idx.p)?;
    if times.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::domain("scan times", "times must be >= 0"));
    }
    let physical = initial_margin(f)?;
    let reference_norm = modulation_norm(&physical, &idx.with_p(idx.p.conjugate()), window)?;
    if reference_norm == 0.0 {
        return Err(Error::domain("decay data", "zero field"));
    }
    let samples = evolve_and_measure(&physical, times, plan, |u| modulation_norm(u, idx, window))?;
    build_report(times, samples, mu, reference_norm, |t| {
        (1.0 + t.abs()).powf(mu)
    })
}

fn build_report(
    times: &[f64],
    samples: Vec<(f64, f64)>,
    mu: f64,
    reference_norm: f64,
    weight: impl Fn(f64) -> f64,
) -> Result<DecayReport> {
    let (raw_norms, margin_mass): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
    let ratios = times
        .iter()
        .zip(&raw_norms)
        .map(|(&t, &n)| weight(t) * n / reference_norm)
        .collect();
    let valid = margin_mass.iter().map(|&m| m <= MARGIN_LIMIT).collect();
    DecayReport {
        times: times.to_vec(),
        raw_norms,
        ratios,
        margin_mass,
        valid,
        mu,
        reference_norm,
        fitted_slope: None,
        fit_window: None,
    }
    .finish()
}

/// Smallest node radius `r` such that the spectral mass with `|ξ| > r` is at
/// most `tail` of the total.
pub fn effective_spectral_radius(f: &ComplexField, tail: f64) -> Result<f64> {
    let spectrum = to_spectral(f)?;
    let radii = f
        .grid()
        .map_frequencies(|xi| xi.iter().map(|x| x * x).sum::<f64>().sqrt());
    let mut pairs: Vec<(f64, f64)> = radii
        .into_iter()
        .zip(spectrum.values())
        .map(|(r, v)| (r, v.norm_sqr()))
        .collect();
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let budget = tail * total;
    let mut outside = 0.0;
    for (i, &(r, m)) in pairs.iter().enumerate() {
        if outside + m > budget {
            return Ok(r);
        }
        outside += m;
        if i + 1 == pairs.len() {
            return Ok(0.0);
        }
    }
    Ok(0.0)
}

/// Box length `4 · v_max · t_max` keeping a wave packet with spectral radius
/// `radius` away from the periodic boundary until `t_max`.
pub fn required_box_length(plan: &PropagatorPlan, radius: f64, t_max: f64) -> f64 {
    let params = plan.params();
    let v_max = plan
        .grid()
        .map_frequencies(|xi| {
            let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            if r <= radius {
                params.group_speed(xi)
            } else {
                0.0
            }
        })
        .into_iter()
        .fold(0.0, f64::max);
    4.0 * v_max * t_max
}
