//! Direct scattering: Jost solutions, scattering coefficients and reflection coefficients.

mod coefficients;
mod jost;
mod potential;

pub use coefficients::{
    jost_rh_matrices, no_resonance_check, reflection_bound, reflection_coefficients, resonance_floor,
    scattering_coefficients, scattering_coefficients_with, ReflectionPair, ScatteringData,
    ScatteringResiduals, JostMatrices, DEFAULT_TOL_IDENTITY, DIVISION_FLOOR,
};
pub use jost::{asymptotic_residual, compute_s_fields, march_jost, JostKind, JostTrace, SFields};
pub use potential::{Potential, Sigma, DECAY_TOLERANCE, JOST_NORM_THRESHOLD, SMALL_NORM_THRESHOLD};
