//! Test data: Gaussians and seeded band-limited random fields.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{ComplexField, GridSpec, Representation};

/// `A · exp(-|x - c|² / (2w²)) · e^{i ξ₀·x}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub width: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub center: Vec<f64>,
    #[serde(default)]
    pub frequency: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

impl Gaussian {
    pub fn new(width: f64, amplitude: f64) -> Self {
        Gaussian {
            width,
            amplitude,
            center: Vec::new(),
            frequency: Vec::new(),
        }
    }

    pub fn sample(&self, grid: &GridSpec) -> Result<ComplexField> {
        if !(self.width > 0.0) || !self.amplitude.is_finite() {
            return Err(Error::domain(
                "gaussian",
                format!("width {} / amplitude {}", self.width, self.amplitude),
            ));
        }
        let d = grid.dim();
        let pad = |v: &[f64], what| -> Result<Vec<f64>> {
            match v.len() {
                0 => Ok(vec![0.0; d]),
                n if n == d => Ok(v.to_vec()),
                n => Err(Error::domain(what, format!("{n} entries for d = {d}"))),
            }
        };
        let center = pad(&self.center, "gaussian center")?;
        let freq = pad(&self.frequency, "gaussian frequency")?;
        let two_w2 = 2.0 * self.width * self.width;
        Ok(ComplexField::from_fn(grid, |x| {
            let r2: f64 = x.iter().zip(&center).map(|(a, c)| (a - c).powi(2)).sum();
            let phase: f64 = x.iter().zip(&freq).map(|(a, k)| a * k).sum();
            Complex64::from_polar(self.amplitude * (-r2 / two_w2).exp(), phase)
        }))
    }

    /// Exact `‖·‖₂²` on ℝ^d.
    pub fn l2_norm_sq(&self, d: usize) -> f64 {
        self.amplitude.powi(2)
            * (std::f64::consts::PI * self.width * self.width).powf(d as f64 / 2.0)
    }
}

/// A random trigonometric polynomial whose Fourier coefficients are i.i.d.
/// complex Gaussians on the lattice modes with `|ξ| ≤ radius`.
///
/// Coefficients are drawn in lexicographic order of the centred mode index,
/// so the same seed gives the same function on any grid of equal lengths
/// that resolves `radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandLimited {
    pub radius: f64,
    pub seed: u64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

impl BandLimited {
    pub fn sample(&self, grid: &GridSpec) -> Result<ComplexField> {
        if !(self.radius >= 0.0) {
            return Err(Error::domain("band limit", format!("{}", self.radius)));
        }
        let d = grid.dim();
        // Mode m on axis a has frequency 2π m / L_a.
        let mode_max: Vec<i64> = (0..d)
            .map(|a| {
                (self.radius * grid.lengths()[a] / (2.0 * std::f64::consts::PI)).floor() as i64
            })
            .collect();
        for (a, &mm) in mode_max.iter().enumerate() {
            if mm >= (grid.points()[a] / 2) as i64 {
                return Err(Error::Resolution {
                    axis: a,
                    nyquist: grid.nyquist(a),
                    required: self.radius,
                });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let scale = self.amplitude * (grid.len() as f64).sqrt() / std::f64::consts::SQRT_2;
        let mut spectrum = vec![Complex64::new(0.0, 0.0); grid.len()];
        let strides = grid.strides();
        let mut m: Vec<i64> = mode_max.iter().map(|&x| -x).collect();
        'odometer: loop {
            let xi2: f64 = m
                .iter()
                .enumerate()
                .map(|(a, &mi)| {
                    (2.0 * std::f64::consts::PI * mi as f64 / grid.lengths()[a]).powi(2)
                })
                .sum();
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            if xi2.sqrt() <= self.radius {
                let slot: usize = m
                    .iter()
                    .enumerate()
                    .map(|(a, &mi)| mi.rem_euclid(grid.points()[a] as i64) as usize * strides[a])
                    .sum();
                spectrum[slot] = Complex64::new(re, im) * scale;
            }
            for a in (0..d).rev() {
                if m[a] < mode_max[a] {
                    m[a] += 1;
                    continue 'odometer;
                }
                m[a] = -mode_max[a];
            }
            break;
        }
        let f = ComplexField::new(grid.clone(), spectrum, Representation::Spectral)?;
        crate::spectral::to_physical(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::lp_norm;
    use crate::spectral::Exponent;

    #[test]
    fn gaussian_l2_matches_closed_form() {
        let g = GridSpec::cube(2, 64, 30.0).unwrap();
        let gauss = Gaussian::new(1.5, 2.0);
        let f = gauss.sample(&g).unwrap();
        let l2 = lp_norm(&f, Exponent::TWO).unwrap();
        assert!((l2 * l2 / gauss.l2_norm_sq(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn band_limited_is_reproducible_across_refinement() {
        let coarse = GridSpec::cube(1, 64, 20.0).unwrap();
        let fine = GridSpec::cube(1, 128, 20.0).unwrap();
        let spec = BandLimited {
            radius: 3.0,
            seed: 7,
            amplitude: 1.0,
        };
        let a = spec.sample(&coarse).unwrap();
        let b = spec.sample(&fine).unwrap();
        for i in 0..64 {
            let diff = (a.values()[i] - b.values()[2 * i]).norm();
            assert!(diff < 1e-12, "node {i}: {diff}");
        }
        let again = spec.sample(&coarse).unwrap();
        assert_eq!(a.values(), again.values());
    }

    #[test]
    fn band_limit_must_be_resolved() {
        let g = GridSpec::cube(1, 16, 20.0).unwrap();
        let spec = BandLimited {
            radius: 10.0,
            seed: 0,
            amplitude: 1.0,
        };
        assert!(matches!(spec.sample(&g), Err(Error::Resolution { .. })));
    }
}
