use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Physical,
    Spectral,
}

/// Complex samples of a function on a [`GridSpec`], tagged with the
/// representation they are stored in.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    values: Vec<Complex64>,
    repr: Representation,
}

impl ComplexField {
    pub fn new(grid: GridSpec, values: Vec<Complex64>, repr: Representation) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(ComplexField { grid, values, repr })
    }

    pub fn zeros(grid: &GridSpec, repr: Representation) -> Self {
        ComplexField {
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid: grid.clone(),
            repr,
        }
    }

    /// Sample `f` at the physical nodes.
    pub fn from_fn(grid: &GridSpec, f: impl FnMut(&[f64]) -> Complex64) -> Self {
        ComplexField {
            values: grid.map_positions(f),
            grid: grid.clone(),
            repr: Representation::Physical,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn expect(&self, repr: Representation) -> Result<()> {
        if self.repr == repr {
            Ok(())
        } else {
            Err(Error::Representation {
                expected: repr,
                found: self.repr,
            })
        }
    }

    pub fn same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Plain Σ|v|² over the stored values, no measure attached.
    pub fn sum_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, factor: Complex64) -> ComplexField {
        self.map(|v| v * factor)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            repr: self.repr,
        }
    }

    /// `a·self + b·other`; both operands must share grid and representation.
    pub fn axpby(&self, a: Complex64, other: &ComplexField, b: Complex64) -> Result<ComplexField> {
        self.same_grid(other)?;
        other.expect(self.repr)?;
        Ok(ComplexField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
            repr: self.repr,
        })
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        self.axpby(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    pub fn add(&self, other: &ComplexField) -> Result<ComplexField> {
        self.axpby(Complex64::new(1.0, 0.0), other, Complex64::new(1.0, 0.0))
    }

    /// Pointwise product of two physical fields.
    pub fn mul(&self, other: &ComplexField) -> Result<ComplexField> {
        self.same_grid(other)?;
        self.expect(Representation::Physical)?;
        other.expect(Representation::Physical)?;
        Ok(ComplexField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| x * y)
                .collect(),
            repr: Representation::Physical,
        })
    }

    /// Fraction of the discrete mass Σ|f|² carried by the outer 10% shell of
    /// the box. Returns 0 for the zero field.
    pub fn margin_mass(&self) -> Result<f64> {
        self.expect(Representation::Physical)?;
        let mask = self.grid.shell_mask(0.1);
        let mut total = 0.0;
        let mut shell = 0.0;
        for (v, outer) in self.values.iter().zip(mask) {
            let m = v.norm_sqr();
            total += m;
            if outer {
                shell += m;
            }
        }
        Ok(if total > 0.0 { shell / total } else { 0.0 })
    }
}
