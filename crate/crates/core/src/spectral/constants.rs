//! Closed-form exponents: the dispersive decay rate, the time weight of the
//! solution space and the threshold power for the global contraction.

use serde::{Deserialize, Serialize};

use super::norms::Exponent;
use crate::error::{Error, Result};

/// Coefficients of the linear symbol `α|ξ|² + βξ₁³ + γξ₁⁴`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDispersion")]
pub struct DispersionParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Deserialize)]
struct RawDispersion {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

impl TryFrom<RawDispersion> for DispersionParams {
    type Error = Error;

    fn try_from(raw: RawDispersion) -> Result<Self> {
        DispersionParams::new(raw.alpha, raw.beta, raw.gamma)
    }
}

impl DispersionParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && gamma.is_finite()) {
            return Err(Error::domain("dispersion", "coefficients must be finite"));
        }
        if alpha == 0.0 {
            return Err(Error::domain("dispersion", "alpha must be nonzero"));
        }
        if beta == 0.0 && gamma == 0.0 {
            return Err(Error::domain(
                "dispersion",
                "beta and gamma cannot both vanish",
            ));
        }
        Ok(DispersionParams { alpha, beta, gamma })
    }

    pub fn gamma_is_zero(&self) -> bool {
        self.gamma == 0.0
    }

    /// `|∇ symbol(ξ)|`, the group speed at frequency `ξ`.
    pub fn group_speed(&self, xi: &[f64]) -> f64 {
        let x1 = xi[0];
        let d1 = 2.0 * self.alpha * x1 + 3.0 * self.beta * x1 * x1 + 4.0 * self.gamma * x1.powi(3);
        let rest: f64 = xi[1..]
            .iter()
            .map(|&x| (2.0 * self.alpha * x).powi(2))
            .sum();
        (d1 * d1 + rest).sqrt()
    }
}

/// `α|ξ|² + βξ₁³ + γξ₁⁴`, the phase of the linear propagator.
pub fn symbol_eval(xi: &[f64], params: &DispersionParams) -> f64 {
    let norm_sq: f64 = xi.iter().map(|x| x * x).sum();
    let x1 = xi.first().copied().unwrap_or(0.0);
    params.alpha * norm_sq + params.beta * x1.powi(3) + params.gamma * x1.powi(4)
}

fn dimension_factor(d: usize, gamma_is_zero: bool) -> f64 {
    let d = d as f64;
    if gamma_is_zero {
        d - 1.0 / 3.0
    } else {
        d - 0.5
    }
}

/// Decay exponent `μ(d, γ, p)` of the `L^{p'} → L^p` estimate, `p ∈ [2, ∞]`.
pub fn mu(d: usize, gamma_is_zero: bool, p: Exponent) -> Result<f64> {
    if p.value() < 2.0 {
        return Err(Error::domain("p", format!("{p} < 2")));
    }
    Ok(dimension_factor(d, gamma_is_zero) * (0.5 - p.reciprocal()))
}

/// Time weight `2/γ_{m,d}` of the solution space.
pub fn gamma_exponent(m: u32, d: usize, gamma_is_zero: bool) -> Result<f64> {
    if m < 1 {
        return Err(Error::domain("m", "nonlinearity power must be >= 1"));
    }
    let m = m as f64;
    Ok(dimension_factor(d, gamma_is_zero) * (m / (2.0 * (m + 2.0))))
}

/// Coefficients `(a, b, c)` of the threshold quadratic `a x² + b x + c`.
pub fn threshold_quadratic(d: usize, gamma_is_zero: bool) -> (f64, f64, f64) {
    let d = d as f64;
    if gamma_is_zero {
        (3.0 * d - 1.0, 3.0 * d - 7.0, -12.0)
    } else {
        (2.0 * d - 1.0, 2.0 * d - 5.0, -8.0)
    }
}

/// Positive root `m₀` of the threshold quadratic.
pub fn m_zero(d: usize, gamma_is_zero: bool) -> f64 {
    let (a, b, c) = threshold_quadratic(d, gamma_is_zero);
    // a > 0 > c, so exactly one positive root; pick the form free of cancellation.
    let disc = (b * b - 4.0 * a * c).sqrt();
    if b <= 0.0 {
        (-b + disc) / (2.0 * a)
    } else {
        (2.0 * c) / (-b - disc)
    }
}

/// `2(m+1)/γ_{m,d} > 1`, the integrability condition behind the contraction.
pub fn kernel_integrable(m: u32, d: usize, gamma_is_zero: bool) -> Result<bool> {
    Ok(gamma_exponent(m, d, gamma_is_zero)? * (m as f64 + 1.0) > 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub d: usize,
    pub gamma_is_zero: bool,
    pub p: Exponent,
    pub m: u32,
    pub mu: f64,
    pub gamma_exp: f64,
    pub m0: f64,
    pub above_threshold: bool,
}

impl ConstantsReport {
    pub fn new(d: usize, gamma_is_zero: bool, m: u32, p: Exponent) -> Result<Self> {
        let m0 = m_zero(d, gamma_is_zero);
        Ok(ConstantsReport {
            d,
            gamma_is_zero,
            p,
            m,
            mu: mu(d, gamma_is_zero, p)?,
            gamma_exp: gamma_exponent(m, d, gamma_is_zero)?,
            m0,
            above_threshold: m as f64 > m0,
        })
    }
}
