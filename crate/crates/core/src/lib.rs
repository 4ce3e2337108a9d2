//! Modulation-space analysis for nonlinear Schrödinger equations with
//! higher-order anisotropic dispersion `α|ξ|² + βξ₁³ + γξ₁⁴` on periodic
//! grids.
//!
//! * [`spectral`]: grids, unitary FFTs, Lebesgue norms, closed-form exponents.
//! * [`modulation`]: smooth frequency-uniform decomposition and `M^s_{p,q}` norms.
//! * [`propagator`]: the linear flow `W(t)` and its decay scans.
//! * [`solver`]: Duhamel quadrature and the Picard fixed point.
//! * [`fields`]: reproducible test data.

pub mod error;
pub mod fields;
pub mod modulation;
pub mod propagator;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
