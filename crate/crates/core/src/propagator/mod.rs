//! The linear solution operator `W(t) = ℱ⁻¹ e^{i t·symbol(ξ)} ℱ` and the
//! numerical verification of its dispersive decay.

mod decay;

pub use decay::{
    dispersive_scan, effective_spectral_radius, fit_loglog_slope, modulation_dispersive_scan,
    required_box_length, DecayReport, INITIAL_MARGIN_LIMIT, MARGIN_LIMIT,
};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modulation::{band_field, Window};
use crate::spectral::{
    symbol_eval, to_spectral, transform_in_place, ComplexField, Direction, DispersionParams,
    GridSpec, Representation,
};

/// Grid, dispersion coefficients and the symbol sampled at every frequency
/// node. Immutable once built.
#[derive(Debug, Clone)]
pub struct PropagatorPlan {
    grid: GridSpec,
    params: DispersionParams,
    phase: Vec<f64>,
}

impl PropagatorPlan {
    pub fn new(grid: &GridSpec, params: DispersionParams) -> Self {
        let phase = grid.map_frequencies(|xi| symbol_eval(xi, &params));
        PropagatorPlan {
            grid: grid.clone(),
            params,
            phase,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &DispersionParams {
        &self.params
    }

    /// Symbol values in storage order.
    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    /// `e^{i t·symbol}` in storage order.
    pub fn multiplier(&self, t: f64) -> Vec<Complex64> {
        self.phase
            .iter()
            .map(|&ph| Complex64::from_polar(1.0, ph * t))
            .collect()
    }

    /// Multiply raw spectral coefficients by `e^{i t·symbol}` in place.
    pub fn apply_to_spectrum(&self, spectrum: &mut [Complex64], t: f64) {
        if t == 0.0 {
            return;
        }
        for (v, &ph) in spectrum.iter_mut().zip(&self.phase) {
            *v *= Complex64::from_polar(1.0, ph * t);
        }
    }

    fn check_grid(&self, f: &ComplexField) -> Result<()> {
        if f.grid() == &self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// `W(t) f`, returned in the representation `f` came in.
pub fn propagate(f: &ComplexField, t: f64, plan: &PropagatorPlan) -> Result<ComplexField> {
    plan.check_grid(f)?;
    let mut spectrum = to_spectral(f)?.into_values();
    plan.apply_to_spectrum(&mut spectrum, t);
    if f.representation() == Representation::Physical {
        transform_in_place(plan.grid(), &mut spectrum, Direction::Inverse);
    }
    ComplexField::new(plan.grid().clone(), spectrum, f.representation())
}

/// `‖□_k W(t) f - W(t) □_k f‖₂ / ‖f‖₂`; both are Fourier multipliers, so this
/// only measures rounding.
pub fn band_commutation_check(
    f: &ComplexField,
    t: f64,
    k: &[i64],
    plan: &PropagatorPlan,
    window: &Window,
) -> Result<f64> {
    plan.check_grid(f)?;
    if window.grid() != plan.grid() {
        return Err(Error::GridMismatch);
    }
    if k.len() != plan.grid().dim() {
        return Err(Error::domain(
            "band index",
            format!("{k:?} has the wrong dimension"),
        ));
    }
    let spectrum = to_spectral(f)?.into_values();
    let norm = spectrum.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let zero = || vec![Complex64::new(0.0, 0.0); plan.grid().len()];

    // □_k (W(t) f)
    let mut evolved = spectrum.clone();
    plan.apply_to_spectrum(&mut evolved, t);
    let lhs = band_field(window, &evolved, k).unwrap_or_else(zero);

    // W(t) (□_k f)
    let rhs = match band_field(window, &spectrum, k) {
        Some(mut band) => {
            transform_in_place(plan.grid(), &mut band, Direction::Forward);
            plan.apply_to_spectrum(&mut band, t);
            transform_in_place(plan.grid(), &mut band, Direction::Inverse);
            band
        }
        None => zero(),
    };
    let diff = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(diff / norm)
}
