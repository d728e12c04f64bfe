//! Jost solutions of the spatial spectral problem in normalized form.
//!
//! With `p(x) = conj(q(-x))` the four normalized solutions satisfy
//!
//! ```text
//! φ±:  φ1' = q φ2,                       φ2 = ∫_{±∞}^x e^{2ik(x-y)} (-σ p(y)) φ1(y) dy,   φ± → e₁
//! ϕ±:  ϕ1 = ∫_{±∞}^x e^{-2ik(x-y)} q(y) ϕ2(y) dy,   ϕ2' = -σ p ϕ1,                         ϕ± → e₂
//! ```
//!
//! Each step applies the oscillatory factor `e^{±2ikh}` exactly and treats the remaining
//! coupling with the trapezoid rule, which is implicit and costs one 2×2 solve per step.
//! For two solutions `u`, `v` of opposite type, `det[u, v]·(1 + σ(h/2)² q p)` is conserved by the
//! step map exactly, so the Wronskian identities of the continuum survive the discretization
//! to round-off wherever the potential vanishes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::potential::Potential;
use crate::error::{IstError, Result};
use crate::numerics::cumulative_from_left;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JostKind {
    PhiMinus,
    PhiPlus,
    PsiMinus,
    PsiPlus,
}

impl JostKind {
    /// `true` when the solution extends analytically to the upper half-plane.
    pub fn upper(self) -> bool {
        matches!(self, JostKind::PhiMinus | JostKind::PsiPlus)
    }

    fn normalized_at_left(self) -> bool {
        matches!(self, JostKind::PhiMinus | JostKind::PsiMinus)
    }

    fn first_type(self) -> bool {
        matches!(self, JostKind::PhiMinus | JostKind::PhiPlus)
    }

    pub fn name(self) -> &'static str {
        match self {
            JostKind::PhiMinus => "phi_minus",
            JostKind::PhiPlus => "phi_plus",
            JostKind::PsiMinus => "psi_minus",
            JostKind::PsiPlus => "psi_plus",
        }
    }

    pub fn check_domain(self, k: Complex64) -> Result<()> {
        let ok = if self.upper() { k.im >= 0.0 } else { k.im <= 0.0 };
        if ok && k.re.is_finite() && k.im.is_finite() {
            Ok(())
        } else {
            Err(IstError::Domain {
                k: format!("{k}"),
                which: self.name().to_string(),
            })
        }
    }
}

/// Two-component samples of one Jost solution over the x-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JostTrace {
    pub k: Complex64,
    pub which: JostKind,
    pub values: Vec<[Complex64; 2]>,
}

/// Potential samples prepared for repeated marching.
pub(crate) struct Marcher<'a> {
    q: &'a [Complex64],
    p: Vec<Complex64>,
    h: f64,
    sigma: f64,
}

impl<'a> Marcher<'a> {
    pub fn new(potential: &'a Potential) -> Result<Self> {
        potential.require_decay()?;
        let p = potential.reflected_conj()?;
        Ok(Self {
            q: potential.values(),
            p,
            h: potential.grid().spacing(),
            sigma: potential.sigma().value(),
        })
    }

    pub fn reflected(&self) -> &[Complex64] {
        &self.p
    }

    /// Factor that turns `det[u, v]` at node `i` into the exactly conserved discrete Wronskian.
    pub fn wronskian_weight(&self, i: usize) -> Complex64 {
        let hh = 0.5 * self.h;
        1.0 + hh * hh * self.sigma * self.q[i] * self.p[i]
    }

    pub fn march(&self, k: Complex64, which: JostKind) -> Vec<[Complex64; 2]> {
        let n = self.q.len();
        let (q, p, s) = (self.q, &self.p, self.sigma);
        let hh = 0.5 * self.h;
        let i2kh = Complex64::new(0.0, 2.0) * k * self.h;
        let start = if which.first_type() {
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
        } else {
            [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
        };
        let mut out = vec![[Complex64::new(0.0, 0.0); 2]; n];
        let mut v = start;
        if which.normalized_at_left() {
            out[0] = v;
            // (1, a12; a21, 1) v' = R, with a12 = -h/2 q', a21 = h/2 σ p'
            let e = if which.first_type() { i2kh.exp() } else { (-i2kh).exp() };
            for j in 0..n - 1 {
                let a12 = -hh * q[j + 1];
                let a21 = hh * s * p[j + 1];
                let det = 1.0 - a12 * a21;
                let (r1, r2) = if which.first_type() {
                    (v[0] + hh * q[j] * v[1], e * (v[1] - hh * s * p[j] * v[0]))
                } else {
                    (e * (v[0] + hh * q[j] * v[1]), v[1] - hh * s * p[j] * v[0])
                };
                v = [(r1 - a12 * r2) / det, (r2 - a21 * r1) / det];
                out[j + 1] = v;
            }
        } else {
            out[n - 1] = v;
            let e = if which.first_type() { (-i2kh).exp() } else { i2kh.exp() };
            for j in (1..n).rev() {
                let a12 = hh * q[j - 1];
                let a21 = -hh * s * p[j - 1];
                let det = 1.0 - a12 * a21;
                let (r1, r2) = if which.first_type() {
                    (v[0] - hh * q[j] * v[1], e * (v[1] + hh * s * p[j] * v[0]))
                } else {
                    (e * (v[0] - hh * q[j] * v[1]), v[1] + hh * s * p[j] * v[0])
                };
                v = [(r1 - a12 * r2) / det, (r2 - a21 * r1) / det];
                out[j - 1] = v;
            }
        }
        out
    }
}

/// March one Jost solution across the grid from the side where it is normalized.
pub fn march_jost(potential: &Potential, k: Complex64, which: JostKind) -> Result<JostTrace> {
    which.check_domain(k)?;
    let m = Marcher::new(potential)?;
    Ok(JostTrace {
        k,
        which,
        values: m.march(k, which),
    })
}

/// Cumulative integrals of `q(y) conj(q(-y))` from either end of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SFields {
    pub s1_minus: Vec<Complex64>,
    pub s1_plus: Vec<Complex64>,
    /// Same integrand as the first pair; kept separate to mirror the two asymptotic limits.
    pub s2_minus: Vec<Complex64>,
    pub s2_plus: Vec<Complex64>,
}

pub fn compute_s_fields(potential: &Potential) -> Result<SFields> {
    let p = potential.reflected_conj()?;
    let prod: Vec<Complex64> = potential.values().iter().zip(&p).map(|(a, b)| a * b).collect();
    let h = potential.grid().spacing();
    let minus = cumulative_from_left(&prod, h);
    let plus = crate::numerics::cumulative_from_right(&prod, h);
    Ok(SFields {
        s1_minus: minus.clone(),
        s1_plus: plus.clone(),
        s2_minus: minus,
        s2_plus: plus,
    })
}

/// Sup over x of the deviation of `2iσk(trace − e)` from its large-k limit.
///
/// φ±: limit `s±(x) e₁ + conj(q(-x)) e₂`.
/// ϕ±: limit `σ q(x) e₁ − s±(x) e₂`, obtained from the integral equations above by
/// one integration by parts.
pub fn asymptotic_residual(potential: &Potential, trace: &JostTrace) -> Result<f64> {
    let s = compute_s_fields(potential)?;
    let p = potential.reflected_conj()?;
    let q = potential.values();
    let sigma = potential.sigma().value();
    let scale = Complex64::new(0.0, 2.0 * sigma) * trace.k;
    let sf = if trace.which.normalized_at_left() { &s.s1_minus } else { &s.s1_plus };
    let mut worst = 0.0f64;
    for (i, v) in trace.values.iter().enumerate() {
        let (dev, limit) = if trace.which.first_type() {
            (
                [scale * (v[0] - 1.0), scale * v[1]],
                [sf[i], p[i]],
            )
        } else {
            (
                [scale * v[0], scale * (v[1] - 1.0)],
                [sigma * q[i], -sf[i]],
            )
        };
        let r = ((dev[0] - limit[0]).norm_sqr() + (dev[1] - limit[1]).norm_sqr()).sqrt();
        worst = worst.max(r);
    }
    Ok(worst)
}

pub(crate) fn det2(u: [Complex64; 2], v: [Complex64; 2]) -> Complex64 {
    u[0] * v[1] - u[1] * v[0]
}
