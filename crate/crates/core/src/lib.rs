//! Spectral Galerkin solvers for the parabolic SPDE
//!
//! ```text
//! dX_t = [k ∂²X_t/∂x² + f(x, X_t)] dt + g(x, X_t) dW_t,  X_t(0) = X_t(1) = 0,
//! ```
//!
//! driven by a trace-class Q-Wiener process, with linear implicit Euler,
//! Milstein and derivative-free Runge-Kutta time stepping and a Monte-Carlo
//! harness for strong error estimation.

pub mod error;
pub mod experiments;
pub mod noise;
pub mod problems;
pub mod schemes;
pub mod spectral;

pub use error::{Error, Result};
pub use experiments::{
    check_gg_assumption, compare_schemes, fit_order, h_distance, pointwise_hs_norm_sq,
    predicted_slope, runtime_table, strong_error, ComparisonReport, ComparisonRow, ErrorReport,
    GgCheck, Level, LevelError, LevelPlan, RuntimeRow, GG_CHECK_STEPS, NUMERICAL_ZERO,
};
pub use noise::{
    compensator_field, increment_field, keyed_standard_normal, sample_lattice, BrownianLattice,
    LatticeSeed, NoiseFamily, NoiseSpectrum,
};
pub use problems::{
    apply_pointwise, builtin, predicted_rates, BuiltinProblem, Coefficient, CoefficientFn,
    PredictedRates, ProblemSpec, Regularity,
};
pub use schemes::{
    gg_factor, initial_state, integrate, milstein_factor, step, GGFactor, RunConfig, SchemeKind,
    Stepper,
};
pub use spectral::{dst, h_norm, idst, PhysicalField, SineBasis, SpectralField};
