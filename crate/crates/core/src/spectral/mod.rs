//! Grids, unitary spectral transforms, discrete norms and the closed-form
//! exponents shared by the other modules.

mod constants;
mod field;
mod grid;
mod norms;
mod transform;

pub use constants::{
    gamma_exponent, kernel_integrable, m_zero, mu, symbol_eval, threshold_quadratic,
    ConstantsReport, DispersionParams,
};
pub use field::{ComplexField, Representation};
pub use grid::GridSpec;
pub use norms::{lp_norm, lp_sum, Exponent};
pub use transform::{
    forward_transform, inverse_transform, to_physical, to_spectral, transform_in_place, Direction,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Indices `(p, q, s)` of a modulation space `M^s_{p,q}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModIndex {
    pub p: Exponent,
    pub q: Exponent,
    pub s: f64,
}

impl ModIndex {
    pub fn new(p: Exponent, q: Exponent, s: f64) -> Result<Self> {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::domain("s", format!("{s} must be finite and >= 0")));
        }
        Ok(ModIndex { p, q, s })
    }

    pub fn with_p(self, p: Exponent) -> Self {
        ModIndex { p, ..self }
    }

    /// `(q = 1 ∧ s ≥ 0) ∨ (q > 1 ∧ s > d/q')`, the algebra condition of the
    /// Hölder inequality and of the existence theorems.
    pub fn is_admissible(&self, d: usize) -> bool {
        if self.q.value() == 1.0 {
            self.s >= 0.0
        } else {
            self.s > d as f64 * self.q.conjugate().reciprocal()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissibility() {
        let one = Exponent::ONE;
        let two = Exponent::TWO;
        assert!(ModIndex::new(two, one, 0.0).unwrap().is_admissible(3));
        // q = 2, d = 1: s > 1/2
        assert!(!ModIndex::new(two, two, 0.5).unwrap().is_admissible(1));
        assert!(ModIndex::new(two, two, 0.51).unwrap().is_admissible(1));
        // q = ∞: s > d
        assert!(!ModIndex::new(two, Exponent::INFINITY, 2.0)
            .unwrap()
            .is_admissible(2));
        assert!(ModIndex::new(two, Exponent::INFINITY, 2.1)
            .unwrap()
            .is_admissible(2));
        assert!(ModIndex::new(two, two, -1.0).is_err());
    }
}
