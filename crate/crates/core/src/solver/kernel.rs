use serde::Serialize;

use super::nonlinearity::{exponential_series_sum, Nonlinearity};
use super::picard::PicardOutcome;
use crate::error::Result;
use crate::spectral::gamma_exponent;

const QUAD_TOL: f64 = 1e-13;

/// `∫_a^b g` for a smooth `g`, split into pieces that grow geometrically away
/// from both ends so the peaks at `τ = 0` and `τ = t` are resolved at any `t`.
fn integrate_graded(g: impl Fn(f64) -> f64 + Copy, a: f64, b: f64) -> f64 {
    let len = b - a;
    if len <= 0.0 {
        return 0.0;
    }
    let mut breaks = vec![a, b];
    let mut h = 1.0;
    while h < len / 2.0 {
        breaks.push(a + h);
        breaks.push(b - h);
        h *= 2.0;
    }
    breaks.push(a + len / 2.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
        .windows(2)
        .map(|w| {
            let scale = w[1] - w[0];
            quadrature::integrate(g, w[0], w[1], QUAD_TOL * scale.max(1.0)).integral
        })
        .sum()
}

/// `⟨t⟩^a ∫_0^t ⟨t-τ⟩^{-a} ⟨τ⟩^{-b} dτ` with `⟨x⟩ = 1 + |x|`.
pub fn compensated_kernel(a: f64, b: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let integrand = move |tau: f64| (1.0 + (t - tau).abs()).powf(-a) * (1.0 + tau.abs()).powf(-b);
    (1.0 + t).powf(a) * integrate_graded(integrand, 0.0, t)
}

/// The kernel for the power `m`: `a = 2/γ_{m,d}`, `b = (m+1)a`.
pub fn power_kernel(m: u32, d: usize, gamma_is_zero: bool, t: f64) -> Result<f64> {
    let a = gamma_exponent(m, d, gamma_is_zero)?;
    Ok(compensated_kernel(a, (m as f64 + 1.0) * a, t))
}

/// `max` of the compensated kernel integral over the samples.
pub fn kernel_integral_bound(
    m: u32,
    d: usize,
    gamma_is_zero: bool,
    t_samples: &[f64],
) -> Result<f64> {
    let mut best = 0.0_f64;
    for &t in t_samples {
        best = best.max(power_kernel(m, d, gamma_is_zero, t)?);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelTrend {
    Finite,
    Divergent,
}

/// Local log-log slope of the compensated kernel between `t_end/10` and
/// `t_end`.
pub fn kernel_tail_slope(m: u32, d: usize, gamma_is_zero: bool, t_end: f64) -> Result<f64> {
    let hi = power_kernel(m, d, gamma_is_zero, t_end)?;
    let lo = power_kernel(m, d, gamma_is_zero, t_end / 10.0)?;
    Ok((hi / lo).log10())
}

/// Divergent when the compensated kernel still grows at least like
/// `t^{slope_limit}` over the final decade before `t_end`.
pub fn classify_kernel(
    m: u32,
    d: usize,
    gamma_is_zero: bool,
    t_end: f64,
    slope_limit: f64,
) -> Result<KernelTrend> {
    Ok(
        if kernel_tail_slope(m, d, gamma_is_zero, t_end)? >= slope_limit {
            KernelTrend::Divergent
        } else {
            KernelTrend::Finite
        },
    )
}

/// Implicit constants measured from a converged run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalConstants {
    /// `‖W(·)u₀‖ / ‖u₀‖`.
    pub linear: f64,
    /// `‖u - W(·)u₀‖` over the model nonlinear term at `R = ‖u‖`.
    pub nonlinear: f64,
}

impl EmpiricalConstants {
    pub fn measure(outcome: &PicardOutcome, spec: &Nonlinearity) -> Option<Self> {
        if outcome.data_norm == 0.0 || outcome.solution_norm == 0.0 {
            return None;
        }
        let model = nonlinear_model(spec, outcome.solution_norm);
        Some(EmpiricalConstants {
            linear: outcome.linear_norm / outcome.data_norm,
            nonlinear: outcome.duhamel_norm / model,
        })
    }
}

/// Size of the nonlinear term in the self-map inequality: `R^{m+1}` for
/// powers, `|λ| R(e^{ρR²} - 1)` for the exponential.
pub fn nonlinear_model(spec: &Nonlinearity, radius: f64) -> f64 {
    match *spec {
        Nonlinearity::Power { m, .. } => radius.powi(m as i32 + 1),
        Nonlinearity::Exponential { lambda, rho, .. } => {
            lambda.norm() * exponential_series_sum(radius, rho)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfMapVerdict {
    pub admissible: bool,
    /// `R` minus the right-hand side of the inequality.
    pub slack: f64,
    pub bound: f64,
}

/// `C_lin ‖u₀‖ + C_nl · model(R) ≤ R`.
pub fn selfmap_budget(
    u0_norm: f64,
    radius: f64,
    spec: &Nonlinearity,
    constants: &EmpiricalConstants,
) -> SelfMapVerdict {
    let bound = constants.linear * u0_norm + constants.nonlinear * nonlinear_model(spec, radius);
    SelfMapVerdict {
        admissible: bound <= radius,
        slack: radius - bound,
        bound,
    }
}

/// Largest `R ≤ r_cap` passing [`selfmap_budget`], or `None`.
///
/// The slack is concave in `R`, so the admissible set is an interval; its
/// right end is found by bisection beyond the point of maximal slack.
pub fn max_admissible_radius(
    u0_norm: f64,
    spec: &Nonlinearity,
    constants: &EmpiricalConstants,
    r_cap: f64,
) -> Option<f64> {
    let slack = |r: f64| selfmap_budget(u0_norm, r, spec, constants).slack;
    // Golden-section search for the peak of the concave slack.
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, r_cap);
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if slack(c) < slack(d) {
            a = c;
        } else {
            b = d;
        }
    }
    let peak = 0.5 * (a + b);
    if slack(peak) < 0.0 {
        return None;
    }
    if slack(r_cap) >= 0.0 {
        return Some(r_cap);
    }
    let (lo, _) = bisect_threshold(peak, r_cap, 200, |r| slack(r) >= 0.0);
    Some(lo)
}

/// Bisection for the boundary of a predicate that holds at `lo` and fails at
/// `hi`. Returns the final bracket `(last pass, first fail)`.
pub fn bisect_threshold(
    mut lo: f64,
    mut hi: f64,
    steps: usize,
    mut pred: impl FnMut(f64) -> bool,
) -> (f64, f64) {
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}
