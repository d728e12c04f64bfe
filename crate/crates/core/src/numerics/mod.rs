//! Uniform grids, sampled fields, quadrature, the discrete Fourier contract and
//! the weighted norms used by the diagnostics.

mod fourier;
mod grid;
mod norms;

pub use fourier::{fourier_pair, frequencies, Direction, FftPair};
pub use grid::{
    cumulative_from_left, cumulative_from_right, trapezoid, trapezoid_integrate, trapezoid_real,
    SampledField, UniformGrid, MIN_SAMPLES,
};
pub use norms::{derivative, relative_l2, weighted_norm, weighted_norm_values, NormKind};

pub(crate) use grid::{complex_pairs, from_pairs};
