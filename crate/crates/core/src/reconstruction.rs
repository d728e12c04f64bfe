//! Potential recovery from reflection data.
//!
//! Primary formula, for every x:
//! `q(x) = −(σ/π) ∫ r2(k) e^{−2ikx} μ₋⁽¹⁾(x;k) dk` with `μ₋⁽¹⁾ = 1 + (Ψ₋)₁₁`.
//!
//! Cross-check: `conj(q(−x)) = −(σ/π) ∫ r1(k) e^{2ikx} ν₊⁽²⁾(x;k) dk` with `ν₊⁽²⁾ = 1 + (Ψ₊)₂₂`,
//! mapped back to `q` by index reflection and conjugation.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{DiagnosticItem, DiagnosticsReport, Tolerances};
use crate::error::{IstError, Result};
use crate::numerics::{relative_l2, trapezoid, weighted_norm_values, NormKind, UniformGrid};
use crate::rh::{RhOptions, RhSolver};
use crate::scattering::{
    reflection_coefficients, scattering_coefficients_with, Potential, ReflectionPair, Sigma,
};

/// Both reconstructions on one x-grid, from one RH solve per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub primary: Potential,
    pub mirror: Potential,
    /// Largest jump residual over all x.
    pub max_jump_residual: f64,
    /// Largest Neumann sweep count over all x and both rows.
    pub max_iterations: usize,
}

fn check_inputs(reflection: &ReflectionPair, xgrid: &UniformGrid, sigma: Sigma) -> Result<()> {
    xgrid.require_symmetric("reconstruction")?;
    if reflection.sigma != sigma {
        return Err(IstError::Configuration(format!(
            "reflection data carries sigma = {} but reconstruction was asked for sigma = {}",
            reflection.sigma, sigma
        )));
    }
    Ok(())
}

struct Node {
    q: Complex64,
    mirror: Complex64,
    residual: f64,
    iterations: usize,
}

/// Run both reconstruction formulas over `xgrid` in parallel.
pub fn reconstruct(
    reflection: &ReflectionPair,
    xgrid: &UniformGrid,
    sigma: Sigma,
    opts: &RhOptions,
) -> Result<Reconstruction> {
    check_inputs(reflection, xgrid, sigma)?;
    let solver = RhSolver::new(reflection, *opts)?;
    let kg = reflection.kgrid;
    let ks = kg.nodes();
    let hk = kg.spacing();
    let scale = -sigma.value() / std::f64::consts::PI;
    let nodes: Vec<Node> = xgrid
        .nodes()
        .par_iter()
        .map(|&x| {
            let sol = solver.solve(x).map_err(|e| IstError::Reconstruction {
                x,
                source: Box::new(e),
            })?;
            let prim: Vec<Complex64> = (0..ks.len())
                .map(|i| reflection.r2[i] * Complex64::from_polar(1.0, -2.0 * ks[i] * x) * sol.mu_minus_1[i])
                .collect();
            let mirr: Vec<Complex64> = (0..ks.len())
                .map(|i| reflection.r1[i] * Complex64::from_polar(1.0, 2.0 * ks[i] * x) * sol.nu_plus_2[i])
                .collect();
            Ok(Node {
                q: scale * trapezoid(&prim, hk),
                mirror: scale * trapezoid(&mirr, hk),
                residual: sol.jump_residual,
                iterations: sol.iterations[0].max(sol.iterations[1]),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = nodes.len();
    let primary = nodes.iter().map(|v| v.q).collect();
    let mirror = (0..n).map(|i| nodes[n - 1 - i].mirror.conj()).collect();
    Ok(Reconstruction {
        primary: Potential::new(crate::numerics::SampledField::new(*xgrid, primary)?, sigma)?,
        mirror: Potential::new(crate::numerics::SampledField::new(*xgrid, mirror)?, sigma)?,
        max_jump_residual: nodes.iter().map(|v| v.residual).fold(0.0, f64::max),
        max_iterations: nodes.iter().map(|v| v.iterations).max().unwrap_or(0),
    })
}

pub fn reconstruct_q(
    reflection: &ReflectionPair,
    xgrid: &UniformGrid,
    sigma: Sigma,
    opts: &RhOptions,
) -> Result<Potential> {
    Ok(reconstruct(reflection, xgrid, sigma, opts)?.primary)
}

pub fn reconstruct_q_mirror(
    reflection: &ReflectionPair,
    xgrid: &UniformGrid,
    sigma: Sigma,
    opts: &RhOptions,
) -> Result<Potential> {
    Ok(reconstruct(reflection, xgrid, sigma, opts)?.mirror)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundtripOptions {
    pub kgrid: UniformGrid,
    pub rh: RhOptions,
    pub tolerances: Tolerances,
}

impl RoundtripOptions {
    pub fn reference() -> Self {
        Self {
            kgrid: UniformGrid::symmetric(24.0, 1024).expect("reference k-grid"),
            rh: RhOptions::default(),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundtripOutcome {
    pub report: DiagnosticsReport,
    pub reflection: ReflectionPair,
    pub reconstruction: Reconstruction,
}

/// Scatter, reflect and reconstruct with both formulas; report the errors.
pub fn roundtrip_report(potential: &Potential, opts: &RoundtripOptions) -> Result<RoundtripOutcome> {
    let tol = &opts.tolerances;
    let data = scattering_coefficients_with(potential, &opts.kgrid, tol.identity)?;
    let reflection = reflection_coefficients(&data)?;
    let rec = reconstruct(&reflection, potential.grid(), potential.sigma(), &opts.rh)?;
    let xg = potential.grid();
    let h = xg.spacing();
    let q = potential.values();
    let e_primary = relative_l2(rec.primary.values(), q, h);
    let e_mirror = relative_l2(rec.mirror.values(), q, h);
    let agreement = relative_l2(rec.mirror.values(), rec.primary.values(), h);
    let diff: Vec<Complex64> = rec.primary.values().iter().zip(q).map(|(a, b)| a - b).collect();
    let q_h11 = weighted_norm_values(q, xg, NormKind::H11)?;
    let e_h11 = weighted_norm_values(&diff, xg, NormKind::H11)?;
    let rel_h11 = if q_h11 > 0.0 { e_h11 / q_h11 } else { e_h11 };
    let r1_h = weighted_norm_values(&reflection.r1, &reflection.kgrid, NormKind::HScript)?;
    let r2_h = weighted_norm_values(&reflection.r2, &reflection.kgrid, NormKind::HScript)?;
    let qhat_h11 = weighted_norm_values(rec.primary.values(), xg, NormKind::H11)?;

    let mut report = DiagnosticsReport::new();
    let anchor = "scattering map and reconstruction are mutually inverse";
    report.push(DiagnosticItem::at_most("relative_l2_error", e_primary, tol.roundtrip, anchor));
    report.push(DiagnosticItem::at_most(
        "relative_l2_error_mirror",
        e_mirror,
        2.0 * tol.roundtrip,
        "mirror reconstruction formula",
    ));
    report.push(DiagnosticItem::at_most(
        "formula_agreement",
        agreement,
        2.0 * tol.roundtrip,
        "both reconstruction formulas recover the same q",
    ));
    report.push(DiagnosticItem::report("relative_h11_error", rel_h11, anchor));
    report.push(DiagnosticItem::at_most(
        "max_jump_residual",
        rec.max_jump_residual,
        tol.jump,
        "M+ - M- = M- S on the real line",
    ));
    report.push(DiagnosticItem::report("r1_h_script", r1_h, "reflection coefficients lie in H_script"));
    report.push(DiagnosticItem::report("r2_h_script", r2_h, "reflection coefficients lie in H_script"));
    let bound = if r1_h + r2_h > 0.0 { qhat_h11 / (r1_h + r2_h) } else { 0.0 };
    report.push(DiagnosticItem::report(
        "norm_bound_ratio",
        bound,
        "||q||_H11 <= c (||r1||_H + ||r2||_H)",
    ));
    if !potential.small_norm() {
        report.warn(format!(
            "||q||_1 = {:.6} exceeds 1/6; the roundtrip runs outside the small-norm theory",
            potential.l1_norm()
        ));
    }
    if data.flagged {
        report.warn(format!(
            "determinant residual {:e} exceeds {:e}; the grids may be too coarse",
            data.residuals.determinant, tol.identity
        ));
    }
    Ok(RoundtripOutcome {
        report,
        reflection,
        reconstruction: rec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xgrid() -> UniformGrid {
        UniformGrid::symmetric(16.0, 512).unwrap()
    }

    fn kgrid() -> UniformGrid {
        UniformGrid::symmetric(24.0, 1024).unwrap()
    }

    #[test]
    fn zero_reflection_gives_zero_potential() {
        let r = ReflectionPair::zero(kgrid(), Sigma::Plus).unwrap();
        let rec = reconstruct(&r, &xgrid(), Sigma::Plus, &RhOptions::default()).unwrap();
        assert!(rec.primary.values().iter().chain(rec.mirror.values()).all(|v| v.norm() == 0.0));
    }

    #[test]
    fn born_limit_is_fourier_inversion() {
        // r1 = 0: q(x) = −(σ/π) ∫ r2 e^{−2ikx} dk; with r2 = e^{−k²}: −(σ/√π) e^{−x²}
        let kg = kgrid();
        for sigma in [Sigma::Plus, Sigma::Minus] {
            for eps in [1.0, 1e-3] {
                let r = ReflectionPair::from_fns(kg, sigma, |_| Complex64::new(0.0, 0.0), |k| {
                    Complex64::new(eps * (-k * k).exp(), 0.0)
                })
                .unwrap();
                let q = reconstruct_q(&r, &xgrid(), sigma, &RhOptions::default()).unwrap();
                for (i, v) in q.values().iter().enumerate() {
                    let x = xgrid().node(i);
                    let exact = -sigma.value() * eps / std::f64::consts::PI.sqrt() * (-x * x).exp();
                    assert!((v - exact).norm() <= 1e-12 * eps.max(1e-3), "{v} {exact}");
                }
            }
        }
    }

    #[test]
    fn mirror_born_limit() {
        // r2 = 0: conj(q(−x)) = −(σ/π) ∫ r1 e^{2ikx} dk
        let kg = kgrid();
        let r = ReflectionPair::from_fns(kg, Sigma::Plus, |k| Complex64::new(0.0, (-k * k).exp()), |_| {
            Complex64::new(0.0, 0.0)
        })
        .unwrap();
        let q = reconstruct_q_mirror(&r, &xgrid(), Sigma::Plus, &RhOptions::default()).unwrap();
        for (i, v) in q.values().iter().enumerate() {
            let x = xgrid().node(i);
            // conj(q(−x)) = −(i/√π) e^{−x²}, so q(x) = (i/√π) e^{−x²}
            let exact = Complex64::new(0.0, (-x * x).exp() / std::f64::consts::PI.sqrt());
            assert!((v - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn sigma_mismatch_is_configuration_error() {
        let r = ReflectionPair::zero(kgrid(), Sigma::Plus).unwrap();
        assert!(matches!(
            reconstruct_q(&r, &xgrid(), Sigma::Minus, &RhOptions::default()),
            Err(IstError::Configuration(_))
        ));
    }

    #[test]
    fn failure_names_the_node() {
        let r = ReflectionPair::from_fns(kgrid(), Sigma::Plus, |k| Complex64::new(0.5 * (-k * k).exp(), 0.0), |k| {
            Complex64::new(0.5 * (-k * k).exp(), 0.0)
        })
        .unwrap();
        let opts = RhOptions {
            max_iter: 1,
            dense_fallback: false,
            ..RhOptions::default()
        };
        let err = reconstruct_q(&r, &xgrid(), Sigma::Plus, &opts).unwrap_err();
        assert!(matches!(err, IstError::Reconstruction { .. }));
        assert!(err.to_string().contains("x = "));
    }

    #[test]
    fn gaussian_roundtrips() {
        for (sigma, center) in [(Sigma::Plus, 0.0), (Sigma::Minus, 0.5)] {
            let p = Potential::gaussian(xgrid(), sigma, 0.08, center).unwrap();
            let out = roundtrip_report(&p, &RoundtripOptions::reference()).unwrap();
            assert!(out.report.overall, "{}", out.report);
            assert!(out.report.value("relative_l2_error").unwrap() < 1e-4);
        }
    }

    #[test]
    fn zero_roundtrip() {
        let p = Potential::zero(xgrid(), Sigma::Plus);
        let out = roundtrip_report(&p, &RoundtripOptions::reference()).unwrap();
        assert_eq!(out.report.value("relative_l2_error"), Some(0.0));
        assert_eq!(out.report.value("formula_agreement"), Some(0.0));
    }
}
