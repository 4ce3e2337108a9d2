use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::field::{ComplexField, Representation};
use crate::error::{Error, Result};

/// A Lebesgue or summability exponent in `[1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub const ONE: Exponent = Exponent(1.0);
    pub const TWO: Exponent = Exponent(2.0);
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::domain("exponent", format!("{p} is not in [1, inf]")));
        }
        Ok(Exponent(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn reciprocal(self) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            1.0 / self.0
        }
    }

    /// Hölder conjugate `p' = p/(p-1)`, with `1' = ∞` and `∞' = 1`.
    pub fn conjugate(self) -> Exponent {
        if self.0 == 1.0 {
            Exponent::INFINITY
        } else if self.is_infinite() {
            Exponent::ONE
        } else {
            Exponent(self.0 / (self.0 - 1.0))
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Exponent::INFINITY),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::domain("exponent", format!("cannot parse {other:?}")))
                .and_then(Exponent::new),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(deserializer)? {
            Raw::Number(p) => Exponent::new(p),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// `(Σ |v|^p)^{1/p}` over any sequence, `max |v|` for `p = ∞`.
///
/// Scales by the largest entry first so large `p` neither overflows nor
/// underflows.
pub fn lp_sum(values: impl Iterator<Item = f64> + Clone, p: Exponent) -> f64 {
    let peak = values.clone().fold(0.0, f64::max);
    if p.is_infinite() || peak == 0.0 {
        return peak;
    }
    let p = p.value();
    let sum: f64 = if p.fract() == 0.0 && p <= 64.0 {
        let k = p as i32;
        values.map(|v| (v / peak).powi(k)).sum()
    } else {
        values.map(|v| (v / peak).powf(p)).sum()
    };
    peak * sum.powf(1.0 / p)
}

/// Discrete `L^p` norm `(Σ|f(x_j)|^p Δx)^{1/p}` of a physical field.
pub fn lp_norm(f: &ComplexField, p: Exponent) -> Result<f64> {
    f.expect(Representation::Physical)?;
    let moduli: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
    let base = lp_sum(moduli.iter().copied(), p);
    if p.is_infinite() {
        Ok(base)
    } else {
        Ok(base * f.grid().cell_volume().powf(p.reciprocal()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;
    use num_complex::Complex64;

    #[test]
    fn conjugates() {
        assert_eq!(Exponent::ONE.conjugate(), Exponent::INFINITY);
        assert_eq!(Exponent::INFINITY.conjugate(), Exponent::ONE);
        assert_eq!(Exponent::TWO.conjugate(), Exponent::TWO);
        assert!((Exponent::new(4.0).unwrap().conjugate().value() - 4.0 / 3.0).abs() < 1e-15);
        assert!(Exponent::new(0.5).is_err());
    }

    #[test]
    fn parses_infinity_and_numbers() {
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::INFINITY);
        assert_eq!("3".parse::<Exponent>().unwrap().value(), 3.0);
        assert!("abc".parse::<Exponent>().is_err());
    }

    #[test]
    fn zero_and_constant_fields() {
        let g = GridSpec::new(&[32, 16], &[3.0, 2.0]).unwrap();
        let z = ComplexField::zeros(&g, Representation::Physical);
        assert_eq!(lp_norm(&z, Exponent::TWO).unwrap(), 0.0);
        let one = ComplexField::from_fn(&g, |_| Complex64::new(1.0, 0.0));
        for p in [1.0, 2.0, 3.5, 7.0] {
            let got = lp_norm(&one, Exponent::new(p).unwrap()).unwrap();
            assert!((got - 6f64.powf(1.0 / p)).abs() < 1e-12);
        }
        assert_eq!(lp_norm(&one, Exponent::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn spectral_field_is_rejected() {
        let g = GridSpec::cube(1, 8, 1.0).unwrap();
        let z = ComplexField::zeros(&g, Representation::Spectral);
        assert!(lp_norm(&z, Exponent::TWO).is_err());
    }
}
