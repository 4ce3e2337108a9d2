//! Nonlinearities, the Duhamel integral and the Picard fixed point of the
//! mild formulation `u = W(t)u₀ + i∫_0^t W(t - τ) f(u(τ)) dτ`.

mod duhamel;
mod kernel;
mod nonlinearity;
mod picard;

pub use duhamel::{duhamel, duhamel_integral_direct, duhamel_integrals, SolutionSeries};
pub use kernel::{
    bisect_threshold, classify_kernel, compensated_kernel, kernel_integral_bound,
    kernel_tail_slope, max_admissible_radius, nonlinear_model, power_kernel, selfmap_budget,
    EmpiricalConstants, KernelTrend, SelfMapVerdict,
};
pub use nonlinearity::{
    apply_nonlinearity, auto_order, exponential_series_sum, exponential_tail_bound, Nonlinearity,
    PowerVariant, Sign, EXPONENT_GUARD,
};
pub use picard::{
    contraction_ratio, picard_map, picard_solve, picard_solve_observed, solution_weight,
    IterationRecord, PicardOutcome, SolverConfig, DIVERGENCE_STREAK,
};
