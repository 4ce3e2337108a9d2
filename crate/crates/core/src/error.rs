use thiserror::Error;

use crate::spectral::Representation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("expected a field in {expected:?} representation, got {found:?}")]
    Representation {
        expected: Representation,
        found: Representation,
    },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("{what} out of domain: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error(
        "grid too coarse: nyquist {nyquist:.4} on axis {axis} is below the required {required:.4}"
    )]
    Resolution {
        axis: usize,
        nyquist: f64,
        required: f64,
    },

    #[error("band decomposition truncated: residual {residual:.3e} exceeds {limit:.3e}")]
    Truncation { residual: f64, limit: f64 },

    #[error("quadrature needs at least two time nodes, got {0}")]
    Quadrature(usize),

    #[error("nonlinearity overflow: rho*|u|^2 = {exponent:.3e} exceeds the guard {limit:.1}")]
    Overflow { exponent: f64, limit: f64 },

    #[error("experiment invalid: {0}")]
    Invalid(String),

    #[error("power m = {m} is not above the threshold m0 = {m0:.6}")]
    Subcritical { m: u32, m0: f64 },

    #[error("picard iteration diverged at iteration {iteration}: contraction ratio {ratio:.4}")]
    Diverged { iteration: usize, ratio: f64 },

    #[error("picard iteration stopped after {iterations} iterations with residual {residual:.3e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("weighted norm {norm:.6e} leaves the ball of radius {radius:.6e}")]
    OutsideBall { norm: f64, radius: f64 },
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }
}
