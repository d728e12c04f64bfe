//! Discrete Fourier contract.
//!
//! Convention, fixed here for the whole crate:
//! * forward: `F_m = n^{-1/2} Σ_j f_j e^{-2πi jm/n}`, inverse with `e^{+2πi jm/n}` and the same factor,
//!   so the pair is unitary and Parseval holds in the plain Euclidean norm;
//! * coefficients use the standard FFT ordering: index `m < n/2` carries `m`, index `m ≥ n/2`
//!   carries `m − n`;
//! * the conjugate variable of a grid with spacing `h` is `ξ_m = 2π m' / (n h)` where `m'` is the
//!   signed index above. [`frequencies`] returns this layout.
//!
//! The output of [`fourier_pair`] is stored on the input grid; only the layout above gives the
//! samples their meaning.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::{SampledField, UniformGrid};
use crate::error::{IstError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Forward and inverse plans for one transform length. Cheap to clone and shareable across threads.
#[derive(Clone)]
pub struct FftPair {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized in-place transform.
    pub fn raw(&self, buf: &mut [Complex64], direction: Direction) {
        match direction {
            Direction::Forward => self.forward.process(buf),
            Direction::Inverse => self.inverse.process(buf),
        }
    }

    /// Unitary in-place transform.
    pub fn unitary(&self, buf: &mut [Complex64], direction: Direction) {
        self.raw(buf, direction);
        let s = 1.0 / (self.n as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= s);
    }
}

/// Conjugate-variable values in FFT order for a grid.
pub fn frequencies(grid: &UniformGrid) -> Vec<f64> {
    let n = grid.len();
    let scale = 2.0 * std::f64::consts::PI / (n as f64 * grid.spacing());
    (0..n)
        .map(|m| {
            let signed = if m < n.div_ceil(2) { m as f64 } else { m as f64 - n as f64 };
            scale * signed
        })
        .collect()
}

/// Unitary DFT of a field whose length is a power of two.
pub fn fourier_pair(field: &SampledField, direction: Direction) -> Result<SampledField> {
    let n = field.grid().len();
    if !n.is_power_of_two() {
        return Err(IstError::UnsupportedSize(n));
    }
    let mut buf = field.values().to_vec();
    FftPair::new(n).unitary(&mut buf, direction);
    SampledField::new(*field.grid(), buf)
}
