use serde::Serialize;

use super::decompose::band_norms;
use super::window::Window;
use crate::error::{Error, Result};
use crate::spectral::{lp_sum, ComplexField, Exponent, ModIndex};

/// Japanese bracket `⟨k⟩ = 1 + |k|`, Euclidean `|k|`.
pub fn japanese_bracket(k: &[i64]) -> f64 {
    1.0 + k.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt()
}

/// `‖{⟨k⟩^s ‖□_k f‖_p}‖_{ℓ^q}`.
pub fn modulation_norm(f: &ComplexField, idx: &ModIndex, window: &Window) -> Result<f64> {
    let norms = band_norms(f, window, idx.p)?;
    Ok(weighted_lq(&norms, idx.q, idx.s))
}

pub(crate) fn weighted_lq(norms: &[(Vec<i64>, f64)], q: Exponent, s: f64) -> f64 {
    lp_sum(
        norms.iter().map(|(k, n)| japanese_bracket(k).powf(s) * n),
        q,
    )
}

/// Weighted sup `max_i ⟨t_i⟩^α · norms_i`, with the time where it is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedSup {
    pub value: f64,
    pub t_star: f64,
}

/// Samples `t ↦ ‖u(t)‖` of a time family together with a weight exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecaySeries {
    times: Vec<f64>,
    norms: Vec<f64>,
    alpha: f64,
}

impl DecaySeries {
    pub fn new(times: Vec<f64>, norms: Vec<f64>, alpha: f64) -> Result<Self> {
        if times.len() != norms.len() {
            return Err(Error::domain(
                "decay series",
                format!("{} times but {} norms", times.len(), norms.len()),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain(
                "decay series",
                "times must be strictly increasing",
            ));
        }
        if norms.iter().any(|n| !(*n >= 0.0)) {
            return Err(Error::domain("decay series", "norms must be nonnegative"));
        }
        Ok(DecaySeries {
            times,
            norms,
            alpha,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `⟨t_i⟩^α · norms_i` for every sample.
    pub fn weighted(&self) -> Vec<f64> {
        self.times
            .iter()
            .zip(&self.norms)
            .map(|(t, n)| (1.0 + t.abs()).powf(self.alpha) * n)
            .collect()
    }
}

/// `sup_t ⟨t⟩^α ‖u(t)‖`, realized as the maximum over the sampled times.
pub fn time_decay_norm(series: &DecaySeries) -> Result<WeightedSup> {
    if series.times.is_empty() {
        return Err(Error::domain("decay series", "empty"));
    }
    let mut best = WeightedSup {
        value: f64::NEG_INFINITY,
        t_star: series.times[0],
    };
    for (t, w) in series.times.iter().zip(series.weighted()) {
        if w > best.value {
            best = WeightedSup {
                value: w,
                t_star: *t,
            };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket() {
        assert_eq!(japanese_bracket(&[0, 0]), 1.0);
        assert_eq!(japanese_bracket(&[3, 4]), 6.0);
        assert_eq!(japanese_bracket(&[-2]), 3.0);
    }

    #[test]
    fn constant_norms_without_weight() {
        let s = DecaySeries::new(vec![0.0, 1.0, 5.0], vec![1.0; 3], 0.0).unwrap();
        assert_eq!(time_decay_norm(&s).unwrap().value, 1.0);
    }

    #[test]
    fn weights_cancel_exact_decay() {
        let alpha = 0.3;
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.7).collect();
        let norms = times.iter().map(|t| (1.0 + t).powf(-alpha)).collect();
        let s = DecaySeries::new(times, norms, alpha).unwrap();
        assert!((time_decay_norm(&s).unwrap().value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sup_reports_argmax() {
        let s = DecaySeries::new(vec![0.0, 1.0, 2.0], vec![1.0, 3.0, 0.5], 0.0).unwrap();
        let sup = time_decay_norm(&s).unwrap();
        assert_eq!(sup.value, 3.0);
        assert_eq!(sup.t_star, 1.0);
    }

    #[test]
    fn invalid_series() {
        assert!(DecaySeries::new(vec![], vec![], 1.0)
            .and_then(|s| time_decay_norm(&s))
            .is_err());
        assert!(DecaySeries::new(vec![1.0, 1.0], vec![1.0, 1.0], 0.0).is_err());
        assert!(DecaySeries::new(vec![1.0], vec![-1.0], 0.0).is_err());
        assert!(DecaySeries::new(vec![1.0], vec![1.0, 2.0], 0.0).is_err());
    }
}
