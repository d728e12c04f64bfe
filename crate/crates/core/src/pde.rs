//! Split-step Fourier reference integrator for `iq_t + q_xx + 2σq²q̄(−x) = 0`.
//!
//! Strang splitting: half nonlinear step, full linear step, half nonlinear step.
//!
//! The linear part `iq_t + q_xx = 0` is the Fourier multiplier `e^{−iξ²dt}`.
//!
//! The nonlinear part `q_t = 2iσ V q` with `V(x) = q(x) conj(q(−x))` is solved exactly, because `V`
//! does not move along it. Writing `(conj q(−x))_t = −2iσ conj(V(−x)) conj(q(−x)) = −2iσ V conj(q(−x))`
//! gives `V_t = 2iσV·V − 2iσV·V = 0`, so the substep is the rotation `q ← q e^{2iσV dt}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{IstError, Result};
use crate::numerics::{frequencies, trapezoid, Direction, FftPair, UniformGrid};
use crate::scattering::Potential;

/// Any sample above this magnitude aborts the run.
pub const BLOW_UP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitStepOptions {
    /// Zero the upper third of the spectrum after each linear step.
    pub dealias: bool,
    /// Disable to obtain the free Schrödinger propagator.
    pub nonlinear: bool,
}

impl Default for SplitStepOptions {
    fn default() -> Self {
        Self {
            dealias: false,
            nonlinear: true,
        }
    }
}

fn step_count(t: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(IstError::RejectedInput(format!("time step must be positive, got {dt}")));
    }
    if t < 0.0 || t.is_nan() {
        return Err(IstError::NegativeTime(t));
    }
    let steps = (t / dt).round();
    if (steps * dt - t).abs() > 1e-9 * t.max(dt) {
        return Err(IstError::RejectedInput(format!("t = {t} is not an integral multiple of dt = {dt}")));
    }
    Ok(steps as usize)
}

struct Stepper {
    fft: FftPair,
    sigma: f64,
    multiplier: Vec<Complex64>,
    mask: Option<Vec<bool>>,
}

impl Stepper {
    fn new(grid: &UniformGrid, sigma: f64, dt: f64, dealias: bool) -> Self {
        let xi = frequencies(grid);
        let xi_max = xi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self {
            fft: FftPair::new(grid.len()),
            sigma,
            multiplier: xi.iter().map(|x| Complex64::from_polar(1.0, -x * x * dt)).collect(),
            mask: dealias.then(|| xi.iter().map(|x| x.abs() <= 2.0 * xi_max / 3.0).collect()),
        }
    }

    fn linear(&self, q: &mut [Complex64]) {
        self.fft.unitary(q, Direction::Forward);
        for (v, m) in q.iter_mut().zip(&self.multiplier) {
            *v *= m;
        }
        if let Some(mask) = &self.mask {
            for (v, keep) in q.iter_mut().zip(mask) {
                if !keep {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
        }
        self.fft.unitary(q, Direction::Inverse);
    }

    fn nonlinear(&self, q: &mut [Complex64], tau: f64) {
        let n = q.len();
        let v: Vec<Complex64> = (0..n).map(|i| q[i] * q[n - 1 - i].conj()).collect();
        for (z, vi) in q.iter_mut().zip(v) {
            *z *= (Complex64::i() * 2.0 * self.sigma * vi * tau).exp();
        }
    }
}

/// Integrate from 0 to `t` with `t/dt` Strang steps.
pub fn split_step_with(q0: &Potential, t: f64, dt: f64, opts: &SplitStepOptions) -> Result<Potential> {
    let grid = q0.grid();
    grid.require_symmetric("split-step integration")?;
    let steps = step_count(t, dt)?;
    let stepper = Stepper::new(grid, q0.sigma().value(), dt, opts.dealias);
    let mut q = q0.values().to_vec();
    for step in 0..steps {
        if opts.nonlinear {
            stepper.nonlinear(&mut q, 0.5 * dt);
        }
        stepper.linear(&mut q);
        if opts.nonlinear {
            stepper.nonlinear(&mut q, 0.5 * dt);
        }
        if let Some(peak) = q.iter().map(|z| z.norm()).find(|m| !(*m <= BLOW_UP)) {
            return Err(IstError::Instability(format!(
                "|q| = {peak:e} after step {} of {steps} (t = {})",
                step + 1,
                (step + 1) as f64 * dt
            )));
        }
    }
    q0.with_values(q)
}

pub fn split_step(q0: &Potential, t: f64, dt: f64) -> Result<Potential> {
    split_step_with(q0, t, dt, &SplitStepOptions::default())
}

/// Exact free evolution `iq_t + q_xx = 0` over time `t` in one multiplier application.
pub fn free_evolution(q0: &Potential, t: f64) -> Result<Potential> {
    let grid = q0.grid();
    let stepper = Stepper::new(grid, 0.0, t, false);
    let mut q = q0.values().to_vec();
    stepper.linear(&mut q);
    q0.with_values(q)
}

/// `Q = ∫ q(x) conj(q(−x)) dx`.
pub fn conserved_quantity(q: &Potential) -> Result<Complex64> {
    let reflected = q.reflected_conj()?;
    let prod: Vec<Complex64> = q.values().iter().zip(&reflected).map(|(a, b)| a * b).collect();
    Ok(trapezoid(&prod, q.grid().spacing()))
}

/// `max_i |a_i − b_i|`.
pub fn linf_distance(a: &Potential, b: &Potential) -> Result<f64> {
    if !a.grid().same_as(b.grid()) {
        return Err(IstError::GridMismatch("L-infinity distance needs one grid".into()));
    }
    Ok(a.values().iter().zip(b.values()).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max))
}
