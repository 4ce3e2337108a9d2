use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{ComplexField, Representation};

/// Largest `ρ|u|²` accepted by the exponential nonlinearity.
pub const EXPONENT_GUARD: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    #[default]
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Which `(m+1)`-fold product of `u` and `ū` stands for `π(u^{m+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PowerVariant {
    /// `(uū)^{m/2} u` for even `m`, `u^{m+1}` for odd `m`.
    #[default]
    Auto,
    /// `|u|^m u`; polynomial only for even `m`.
    Gauge,
    /// `u^{m+1}`.
    Holomorphic,
}

/// `f(u)` in `i∂_t u + L u = f(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Nonlinearity {
    /// `± π(u^{m+1})`.
    Power {
        m: u32,
        #[serde(default)]
        sign: Sign,
        #[serde(default)]
        variant: PowerVariant,
    },
    /// `λ Σ_{k=1}^{K} ρ^k/k! |u|^{2k} u`, the order-`K` truncation of
    /// `λ(e^{ρ|u|²} - 1)u`.
    Exponential {
        lambda: Complex64,
        rho: f64,
        order: usize,
    },
}

impl Nonlinearity {
    pub fn power(m: u32) -> Self {
        Nonlinearity::Power {
            m,
            sign: Sign::Plus,
            variant: PowerVariant::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Nonlinearity::Power { m, .. } if m < 1 => {
                Err(Error::domain("nonlinearity", "power m must be >= 1"))
            }
            Nonlinearity::Exponential { lambda, rho, order } => {
                if !(rho > 0.0) || !rho.is_finite() {
                    Err(Error::domain(
                        "nonlinearity",
                        format!("rho = {rho} must be > 0"),
                    ))
                } else if order < 1 {
                    Err(Error::domain("nonlinearity", "series order must be >= 1"))
                } else if !lambda.is_finite() {
                    Err(Error::domain("nonlinearity", "lambda must be finite"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Degree of homogeneity used to pick the solution space: `m` for powers,
    /// `2` (the cubic leading term) for the exponential.
    pub fn effective_power(&self) -> u32 {
        match *self {
            Nonlinearity::Power { m, .. } => m,
            Nonlinearity::Exponential { .. } => 2,
        }
    }

    /// Pointwise value at one complex number.
    pub fn eval(&self, u: Complex64) -> Complex64 {
        match *self {
            Nonlinearity::Power { m, sign, variant } => sign.value() * power_term(u, m, variant),
            Nonlinearity::Exponential { lambda, rho, order } => {
                let r = rho * u.norm_sqr();
                // Σ_{k=1}^K r^k/k! by Horner: r(1 + r/2(1 + r/3(...)))
                let mut acc = 1.0;
                for k in (2..=order).rev() {
                    acc = 1.0 + acc * r / k as f64;
                }
                lambda * u * (acc * r)
            }
        }
    }
}

fn power_term(u: Complex64, m: u32, variant: PowerVariant) -> Complex64 {
    match variant {
        PowerVariant::Auto if m.is_multiple_of(2) => u * u.norm_sqr().powi((m / 2) as i32),
        PowerVariant::Auto | PowerVariant::Holomorphic => u.powu(m + 1),
        PowerVariant::Gauge => u * u.norm().powi(m as i32),
    }
}

/// `f(u)` evaluated pointwise on a physical field.
pub fn apply_nonlinearity(u: &ComplexField, spec: &Nonlinearity) -> Result<ComplexField> {
    u.expect(Representation::Physical)?;
    spec.validate()?;
    if let Nonlinearity::Exponential { rho, .. } = *spec {
        let exponent = rho * u.max_abs().powi(2);
        if !(exponent <= EXPONENT_GUARD) {
            return Err(Error::Overflow {
                exponent,
                limit: EXPONENT_GUARD,
            });
        }
    }
    Ok(u.map(|z| spec.eval(z)))
}

/// Bound on the dropped tail `|λ| Σ_{k>K} ρ^k/k! a^{2k+1}` at amplitude `a`:
/// `|λ| ρ^{K+1} a^{2K+3} e^{ρa²} / (K+1)!`.
pub fn exponential_tail_bound(lambda_abs: f64, rho: f64, order: usize, amplitude: f64) -> f64 {
    let k1 = order as f64 + 1.0;
    let log = lambda_abs.ln()
        + k1 * rho.ln()
        + (2.0 * k1 + 1.0) * amplitude.ln()
        + rho * amplitude * amplitude
        - ln_factorial(order + 1);
    if amplitude == 0.0 || lambda_abs == 0.0 {
        0.0
    } else {
        log.exp()
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Smallest order `K ≥ 1` whose tail bound at amplitude `radius` is below
/// `tol / 10`.
pub fn auto_order(lambda_abs: f64, rho: f64, radius: f64, tol: f64) -> usize {
    (1..10_000)
        .find(|&k| exponential_tail_bound(lambda_abs, rho, k, radius) < tol / 10.0)
        .unwrap_or(10_000)
}

/// `Σ_{k≥1} ρ^k/k! R^{2k+1} = R(e^{ρR²} - 1)`.
pub fn exponential_series_sum(radius: f64, rho: f64) -> f64 {
    radius * (rho * radius * radius).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = GridSpec::cube(1, 16, 1.0).unwrap();
        let u = ComplexField::zeros(&g, Representation::Physical);
        for spec in [
            Nonlinearity::power(3),
            Nonlinearity::Exponential {
                lambda: c(1.0, 0.5),
                rho: 2.0,
                order: 8,
            },
        ] {
            assert!(apply_nonlinearity(&u, &spec).unwrap().is_zero());
        }
    }

    #[test]
    fn cubic_on_constant() {
        let z = c(0.3, -1.2);
        let out = Nonlinearity::power(2).eval(z);
        assert!((out - z * z.norm_sqr()).norm() < 1e-15);
        let minus = Nonlinearity::Power {
            m: 2,
            sign: Sign::Minus,
            variant: PowerVariant::Auto,
        };
        assert!((minus.eval(z) + out).norm() < 1e-15);
    }

    #[test]
    fn power_variants() {
        let z = c(0.7, 0.4);
        let odd = |variant| Nonlinearity::Power {
            m: 3,
            sign: Sign::Plus,
            variant,
        };
        assert!((odd(PowerVariant::Auto).eval(z) - z * z * z * z).norm() < 1e-15);
        assert!((odd(PowerVariant::Gauge).eval(z) - z * z.norm().powi(3)).norm() < 1e-15);
        let even = Nonlinearity::Power {
            m: 4,
            sign: Sign::Plus,
            variant: PowerVariant::Gauge,
        };
        assert!((even.eval(z) - Nonlinearity::power(4).eval(z)).norm() < 1e-15);
    }

    #[test]
    fn truncated_series_within_tail_bound() {
        let lambda = c(1.0, 0.0);
        let (rho, z) = (1.0, c(0.6, 0.5));
        let exact = lambda * z * (rho * z.norm_sqr()).exp_m1();
        for order in 1..12 {
            let spec = Nonlinearity::Exponential { lambda, rho, order };
            let err = (spec.eval(z) - exact).norm();
            let bound = exponential_tail_bound(lambda.norm(), rho, order, z.norm());
            assert!(
                err <= bound * (1.0 + 1e-12) + 1e-16,
                "K={order}: {err} > {bound}"
            );
        }
    }

    #[test]
    fn series_sum_closed_form() {
        let (r, rho) = (0.1_f64, 1.0_f64);
        let partial: f64 = (1..30)
            .map(|k| rho.powi(k) / (1..=k).map(f64::from).product::<f64>() * r.powi(2 * k + 1))
            .sum();
        let sum = exponential_series_sum(r, rho);
        assert!((sum / partial - 1.0).abs() < 1e-14);
        assert!((sum / (0.1 * (0.01_f64.exp() - 1.0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn auto_order_meets_tolerance() {
        let k = auto_order(1.0, 1.0, 0.5, 1e-8);
        assert!(exponential_tail_bound(1.0, 1.0, k, 0.5) < 1e-9);
        assert!(k == 1 || exponential_tail_bound(1.0, 1.0, k - 1, 0.5) >= 1e-9);
    }

    #[test]
    fn overflow_is_reported() {
        let g = GridSpec::cube(1, 16, 1.0).unwrap();
        let u = ComplexField::from_fn(&g, |_| c(30.0, 0.0));
        let spec = Nonlinearity::Exponential {
            lambda: c(1.0, 0.0),
            rho: 1.0,
            order: 4,
        };
        assert!(matches!(
            apply_nonlinearity(&u, &spec),
            Err(Error::Overflow { .. })
        ));
    }
}
