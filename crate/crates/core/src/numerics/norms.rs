use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{trapezoid_real, SampledField, UniformGrid};
use crate::error::{IstError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    L1,
    L2,
    /// `(∫ (1 + x²)|f|²)^{1/2}`
    L21,
    H1,
    /// L21 norm of f plus L21 norm of f', combined in quadrature.
    H11,
    /// `‖f‖_{H¹} + ‖f‖_{L^{2,1}} + sup |x f|`, the space of reflection coefficients.
    HScript,
}

impl NormKind {
    pub const ALL: [NormKind; 6] = [
        NormKind::L1,
        NormKind::L2,
        NormKind::L21,
        NormKind::H1,
        NormKind::H11,
        NormKind::HScript,
    ];

    fn needs_derivative(self) -> bool {
        matches!(self, NormKind::H1 | NormKind::H11 | NormKind::HScript)
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NormKind::L1 => "L1",
            NormKind::L2 => "L2",
            NormKind::L21 => "L21",
            NormKind::H1 => "H1",
            NormKind::H11 => "H11",
            NormKind::HScript => "H_script",
        };
        f.write_str(s)
    }
}

impl FromStr for NormKind {
    type Err = IstError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(NormKind::L1),
            "l2" => Ok(NormKind::L2),
            "l21" => Ok(NormKind::L21),
            "h1" => Ok(NormKind::H1),
            "h11" => Ok(NormKind::H11),
            "h_script" | "hscript" => Ok(NormKind::HScript),
            other => Err(IstError::Configuration(format!("unknown norm kind '{other}'"))),
        }
    }
}

/// Finite-difference derivative: centered in the interior, second-order one-sided at the ends.
pub fn derivative(values: &[Complex64], h: f64) -> Result<Vec<Complex64>> {
    let n = values.len();
    if n < 3 {
        return Err(IstError::GridTooCoarse(format!(
            "derivative needs at least 3 samples, got {n}"
        )));
    }
    let mut d = Vec::with_capacity(n);
    d.push((-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h));
    for i in 1..n - 1 {
        d.push((values[i + 1] - values[i - 1]) / (2.0 * h));
    }
    d.push((3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h));
    Ok(d)
}

fn l2(values: &[Complex64], h: f64) -> f64 {
    let sq: Vec<f64> = values.iter().map(|v| v.norm_sqr()).collect();
    trapezoid_real(&sq, h).sqrt()
}

fn l21(values: &[Complex64], grid: &UniformGrid) -> f64 {
    let sq: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = grid.node(i);
            (1.0 + x * x) * v.norm_sqr()
        })
        .collect();
    trapezoid_real(&sq, grid.spacing()).sqrt()
}

/// Norm of raw samples laid out on `grid`.
pub fn weighted_norm_values(values: &[Complex64], grid: &UniformGrid, kind: NormKind) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(IstError::GridMismatch(format!(
            "{} samples for a grid of {} nodes",
            values.len(),
            grid.len()
        )));
    }
    let h = grid.spacing();
    let deriv = if kind.needs_derivative() {
        Some(derivative(values, h)?)
    } else {
        None
    };
    let value = match kind {
        NormKind::L1 => {
            let a: Vec<f64> = values.iter().map(|v| v.norm()).collect();
            trapezoid_real(&a, h)
        }
        NormKind::L2 => l2(values, h),
        NormKind::L21 => l21(values, grid),
        NormKind::H1 => l2(values, h).hypot(l2(deriv.as_deref().unwrap_or_default(), h)),
        NormKind::H11 => l21(values, grid).hypot(l21(deriv.as_deref().unwrap_or_default(), grid)),
        NormKind::HScript => {
            let h1 = l2(values, h).hypot(l2(deriv.as_deref().unwrap_or_default(), h));
            let sup = values
                .iter()
                .enumerate()
                .map(|(i, v)| grid.node(i).abs() * v.norm())
                .fold(0.0, f64::max);
            h1 + l21(values, grid) + sup
        }
    };
    Ok(value)
}

/// Discrete analogue of the named norm of a sampled field.
pub fn weighted_norm(field: &SampledField, kind: NormKind) -> Result<f64> {
    weighted_norm_values(field.values(), field.grid(), kind)
}

/// `‖a − b‖₂ / ‖b‖₂`, or the absolute error when `b` vanishes.
pub fn relative_l2(a: &[Complex64], b: &[Complex64], h: f64) -> f64 {
    let diff: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let num = l2(&diff, h);
    let den = l2(b, h);
    if den > 0.0 {
        num / den
    } else {
        num
    }
}
