use num_complex::Complex64;
use rayon::prelude::*;

use super::nonlinearity::{apply_nonlinearity, Nonlinearity};
use crate::error::{Error, Result};
use crate::modulation::{modulation_norm, WeightedSup, Window};
use crate::propagator::PropagatorPlan;
use crate::spectral::{
    to_physical, transform_in_place, ComplexField, Direction, GridSpec, ModIndex, Representation,
};

const UNIFORM_TOL: f64 = 1e-9;

/// Physical fields on an increasing time grid starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSeries {
    times: Vec<f64>,
    fields: Vec<ComplexField>,
}

impl SolutionSeries {
    pub fn new(times: Vec<f64>, fields: Vec<ComplexField>) -> Result<Self> {
        check_times(&times)?;
        if fields.len() != times.len() {
            return Err(Error::domain(
                "solution series",
                format!("{} times but {} fields", times.len(), fields.len()),
            ));
        }
        let fields = fields.iter().map(to_physical).collect::<Result<Vec<_>>>()?;
        if fields.iter().any(|f| f.grid() != fields[0].grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(SolutionSeries { times, fields })
    }

    /// The free evolution `t ↦ W(t)u₀` sampled on `times`.
    pub fn linear(u0: &ComplexField, times: &[f64], plan: &PropagatorPlan) -> Result<Self> {
        check_times(times)?;
        if u0.grid() != plan.grid() {
            return Err(Error::GridMismatch);
        }
        let spectrum = crate::spectral::to_spectral(u0)?.into_values();
        let fields = times
            .par_iter()
            .map(|&t| {
                let mut v = spectrum.clone();
                plan.apply_to_spectrum(&mut v, t);
                transform_in_place(plan.grid(), &mut v, Direction::Inverse);
                ComplexField::new(plan.grid().clone(), v, Representation::Physical)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SolutionSeries {
            times: times.to_vec(),
            fields,
        })
    }

    pub fn zeros(grid: &GridSpec, times: &[f64]) -> Result<Self> {
        check_times(times)?;
        let zero = ComplexField::zeros(grid, Representation::Physical);
        Ok(SolutionSeries {
            times: times.to_vec(),
            fields: vec![zero; times.len()],
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[ComplexField] {
        &self.fields
    }

    pub fn grid(&self) -> &GridSpec {
        self.fields[0].grid()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.fields.iter().all(ComplexField::is_zero)
    }

    pub fn is_finite(&self) -> bool {
        self.fields.iter().all(ComplexField::is_finite)
    }

    /// Nodewise `self - other`.
    pub fn sub(&self, other: &SolutionSeries) -> Result<SolutionSeries> {
        self.zip_with(other, |a, b| a.sub(b))
    }

    /// Nodewise `self + other`.
    pub fn add(&self, other: &SolutionSeries) -> Result<SolutionSeries> {
        self.zip_with(other, |a, b| a.add(b))
    }

    pub fn scale(&self, factor: Complex64) -> SolutionSeries {
        SolutionSeries {
            times: self.times.clone(),
            fields: self.fields.iter().map(|f| f.scale(factor)).collect(),
        }
    }

    fn zip_with(
        &self,
        other: &SolutionSeries,
        op: impl Fn(&ComplexField, &ComplexField) -> Result<ComplexField>,
    ) -> Result<SolutionSeries> {
        if self.times != other.times {
            return Err(Error::domain("solution series", "time grids differ"));
        }
        let fields = self
            .fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| op(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(SolutionSeries {
            times: self.times.clone(),
            fields,
        })
    }

    /// `‖u(t_i)‖_{M^s_{p,q}}` at every node, in node order.
    pub fn modulation_norms(&self, idx: &ModIndex, window: &Window) -> Result<Vec<f64>> {
        self.fields
            .par_iter()
            .map(|f| modulation_norm(f, idx, window))
            .collect()
    }

    /// `max_i ⟨t_i⟩^α ‖u(t_i)‖_{M^s_{p,q}}`, the sampled weighted norm.
    pub fn weighted_norm(
        &self,
        idx: &ModIndex,
        alpha: f64,
        window: &Window,
    ) -> Result<WeightedSup> {
        let norms = self.modulation_norms(idx, window)?;
        let series = crate::modulation::DecaySeries::new(self.times.clone(), norms, alpha)?;
        crate::modulation::time_decay_norm(&series)
    }

    /// Uniform step of the time grid, if it has one.
    pub fn uniform_step(&self) -> Option<f64> {
        uniform_step(&self.times)
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    match times.first() {
        None => Err(Error::domain("time grid", "empty")),
        Some(&t0) if t0 != 0.0 => Err(Error::domain("time grid", format!("starts at {t0}, not 0"))),
        _ if times.windows(2).any(|w| !(w[1] > w[0])) => Err(Error::domain(
            "time grid",
            "times must be strictly increasing",
        )),
        _ => Ok(()),
    }
}

pub(crate) fn uniform_step(times: &[f64]) -> Option<f64> {
    if times.len() < 2 {
        return None;
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let uniform = times
        .iter()
        .enumerate()
        .all(|(i, &t)| (t - i as f64 * dt).abs() <= UNIFORM_TOL * dt.max(t.abs()));
    uniform.then_some(dt)
}

fn spectra_of(sources: &[ComplexField], plan: &PropagatorPlan) -> Result<Vec<Vec<Complex64>>> {
    sources
        .par_iter()
        .map(|f| {
            if f.grid() != plan.grid() {
                return Err(Error::GridMismatch);
            }
            Ok(crate::spectral::to_spectral(f)?.into_values())
        })
        .collect()
}

/// Trapezoid approximations of `∫_0^{t_i} W(t_i - τ) F(τ) dτ` for every node,
/// given samples `F(t_j)`, returned as spectra.
///
/// On a uniform grid, `S_i = Σ_{j≤i} e^{iφ(t_i - t_j)} F̂_j` obeys
/// `S_i = e^{iφΔt} S_{i-1} + F̂_i` and the rule is
/// `Δt (S_i - ½ e^{iφt_i} F̂_0 - ½ F̂_i)`.
pub(crate) fn duhamel_spectra(
    sources: &[ComplexField],
    times: &[f64],
    plan: &PropagatorPlan,
) -> Result<Vec<Vec<Complex64>>> {
    check_times(times)?;
    if times.len() < 2 {
        return Err(Error::Quadrature(times.len()));
    }
    if sources.len() != times.len() {
        return Err(Error::domain(
            "duhamel sources",
            format!("{} sources for {} times", sources.len(), times.len()),
        ));
    }
    let dt = uniform_step(times)
        .ok_or_else(|| Error::domain("time grid", "the fast trapezoid needs uniform steps"))?;
    let hat = spectra_of(sources, plan)?;
    let step = plan.multiplier(dt);
    let n = plan.grid().len();

    let mut out = Vec::with_capacity(times.len());
    out.push(vec![Complex64::new(0.0, 0.0); n]);
    let mut running = hat[0].clone();
    for (i, &t) in times.iter().enumerate().skip(1) {
        let mut integral = Vec::with_capacity(n);
        for k in 0..n {
            running[k] = step[k] * running[k] + hat[i][k];
            let first = Complex64::from_polar(1.0, plan.phase()[k] * t) * hat[0][k];
            integral.push(dt * (running[k] - 0.5 * first - 0.5 * hat[i][k]));
        }
        out.push(integral);
    }
    Ok(out)
}

/// Duhamel integrals of given integrand samples at every node, in physical
/// space. Node 0 is zero.
pub fn duhamel_integrals(
    sources: &[ComplexField],
    times: &[f64],
    plan: &PropagatorPlan,
) -> Result<Vec<ComplexField>> {
    let spectra = duhamel_spectra(sources, times, plan)?;
    spectra
        .into_par_iter()
        .map(|mut v| {
            transform_in_place(plan.grid(), &mut v, Direction::Inverse);
            ComplexField::new(plan.grid().clone(), v, Representation::Physical)
        })
        .collect()
}

/// The same rule evaluated term by term at one node, on any increasing grid:
/// `Σ_j (t_{j+1} - t_j)/2 · (W(t_i - t_j)F_j + W(t_i - t_{j+1})F_{j+1})`.
pub fn duhamel_integral_direct(
    sources: &[ComplexField],
    times: &[f64],
    plan: &PropagatorPlan,
    t_index: usize,
) -> Result<ComplexField> {
    check_times(times)?;
    if times.len() < 2 {
        return Err(Error::Quadrature(times.len()));
    }
    if t_index >= times.len() || sources.len() != times.len() {
        return Err(Error::domain(
            "duhamel index",
            format!(
                "node {t_index} with {} sources and {} times",
                sources.len(),
                times.len()
            ),
        ));
    }
    let n = plan.grid().len();
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    if t_index > 0 {
        let hat = spectra_of(&sources[..=t_index], plan)?;
        let ti = times[t_index];
        for j in 0..=t_index {
            let left = if j > 0 { times[j] - times[j - 1] } else { 0.0 };
            let right = if j < t_index {
                times[j + 1] - times[j]
            } else {
                0.0
            };
            let w = 0.5 * (left + right);
            let lag = ti - times[j];
            for (k, a) in acc.iter_mut().enumerate() {
                *a += w * Complex64::from_polar(1.0, plan.phase()[k] * lag) * hat[j][k];
            }
        }
    }
    transform_in_place(plan.grid(), &mut acc, Direction::Inverse);
    ComplexField::new(plan.grid().clone(), acc, Representation::Physical)
}

/// `∫_0^{t_i} W(t_i - τ) f(u(τ)) dτ` by the trapezoid rule on the stored nodes.
pub fn duhamel(
    series: &SolutionSeries,
    spec: &Nonlinearity,
    plan: &PropagatorPlan,
    t_index: usize,
) -> Result<ComplexField> {
    if series.len() < 2 {
        return Err(Error::Quadrature(series.len()));
    }
    if t_index >= series.len() {
        return Err(Error::domain(
            "duhamel index",
            format!("{t_index} >= {}", series.len()),
        ));
    }
    let sources = series.fields[..=t_index]
        .par_iter()
        .map(|u| apply_nonlinearity(u, spec))
        .collect::<Result<Vec<_>>>()?;
    let mut padded = sources;
    padded.resize(
        series.len(),
        ComplexField::zeros(series.grid(), Representation::Physical),
    );
    duhamel_integral_direct(&padded, series.times(), plan, t_index)
}
