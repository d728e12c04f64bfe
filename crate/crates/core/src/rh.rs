//! Riemann-Hilbert solve at fixed x.
//!
//! The unknown is `Ψ₋ = M₋ − I`, fixed point of `Ψ₋ = P⁻(Ψ₋S + S)`. Right multiplication by `S`
//! acts on each row separately, so the two rows are solved independently:
//!
//! ```text
//! ψ ← P⁻(ψS + s),   (ψS)₁ = ψ₁S₁₁ + ψ₂S₂₁,   (ψS)₂ = ψ₁S₁₂
//! ```
//!
//! with `s` the matching row of `S`. Neumann iteration is tried first; if it stalls the
//! discretized operator `I − P⁻(·S)` is assembled densely and factored.

use nalgebra::{DMatrix, Dyn, LU};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{DiagnosticItem, DiagnosticsReport};
use crate::error::{IstError, Result};
use crate::numerics::UniformGrid;
use crate::plemelj::{Plemelj, Side};
use crate::scattering::ReflectionPair;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `S(x;k) = [[σ r1 r2, σ r2 e^{−2ikx}], [r1 e^{2ikx}, 0]]`, stored by entry.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpMatrix {
    pub x: f64,
    pub kgrid: UniformGrid,
    pub s11: Vec<Complex64>,
    pub s12: Vec<Complex64>,
    pub s21: Vec<Complex64>,
}

impl JumpMatrix {
    pub fn entry(&self, i: usize) -> [[Complex64; 2]; 2] {
        [[self.s11[i], self.s12[i]], [self.s21[i], ZERO]]
    }

    /// Largest Frobenius norm of `S²` over k.
    pub fn square_norm(&self) -> f64 {
        (0..self.s11.len())
            .map(|i| frob(matmul(self.entry(i), self.entry(i))))
            .fold(0.0, f64::max)
    }
}

pub fn build_jump(reflection: &ReflectionPair, x: f64) -> JumpMatrix {
    let sigma = reflection.sigma.value();
    let g = reflection.kgrid;
    let n = g.len();
    let mut s11 = Vec::with_capacity(n);
    let mut s12 = Vec::with_capacity(n);
    let mut s21 = Vec::with_capacity(n);
    for i in 0..n {
        let e = Complex64::from_polar(1.0, 2.0 * g.node(i) * x);
        let (r1, r2) = (reflection.r1[i], reflection.r2[i]);
        s11.push(sigma * r1 * r2);
        s12.push(sigma * r2 * e.conj());
        s21.push(r1 * e);
    }
    JumpMatrix {
        x,
        kgrid: g,
        s11,
        s12,
        s21,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhOptions {
    /// Relative sup-norm update at which Neumann iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Fall back to the dense factorization when Neumann iteration does not converge.
    pub dense_fallback: bool,
    /// Skip Neumann iteration and factor directly.
    pub force_dense: bool,
}

impl Default for RhOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            dense_fallback: true,
            force_dense: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Neumann,
    Dense,
}

/// 2×2 matrix-valued samples over k, stored by entry.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    pub e11: Vec<Complex64>,
    pub e12: Vec<Complex64>,
    pub e21: Vec<Complex64>,
    pub e22: Vec<Complex64>,
}

impl MatrixField {
    pub fn zeros(n: usize) -> Self {
        let z = vec![ZERO; n];
        Self {
            e11: z.clone(),
            e12: z.clone(),
            e21: z.clone(),
            e22: z,
        }
    }

    pub fn entry(&self, i: usize) -> [[Complex64; 2]; 2] {
        [[self.e11[i], self.e12[i]], [self.e21[i], self.e22[i]]]
    }

    pub fn len(&self) -> usize {
        self.e11.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e11.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: &Vec<Complex64>| v.iter().map(|z| z * c).collect();
        Self {
            e11: s(&self.e11),
            e12: s(&self.e12),
            e21: s(&self.e21),
            e22: s(&self.e22),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.len()).map(|i| frob(self.entry(i))).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhSolution {
    pub x: f64,
    pub kgrid: UniformGrid,
    pub psi_minus: MatrixField,
    /// `P⁺(Ψ₋S + S)`
    pub psi_plus: MatrixField,
    /// `1 + (Ψ₋)₁₁`
    pub mu_minus_1: Vec<Complex64>,
    /// `1 + (Ψ₊)₂₂`
    pub nu_plus_2: Vec<Complex64>,
    pub jump_residual: f64,
    /// Fixed-point sweeps per row after the leading term `P⁻S` (0 when solved densely).
    pub iterations: [usize; 2],
    pub method: SolveMethod,
}

fn matmul(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn frob(m: [[Complex64; 2]; 2]) -> f64 {
    m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn sup(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn sup_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Per-reflection solver; reusable across x and shareable across threads.
pub struct RhSolver<'a> {
    reflection: &'a ReflectionPair,
    plemelj: Plemelj,
    opts: RhOptions,
}

struct RowResult {
    p1: Vec<Complex64>,
    p2: Vec<Complex64>,
    iterations: usize,
    converged: bool,
}

impl<'a> RhSolver<'a> {
    pub fn new(reflection: &'a ReflectionPair, opts: RhOptions) -> Result<Self> {
        let g = reflection.kgrid;
        g.require_symmetric("the RH k-grid")?;
        Ok(Self {
            reflection,
            plemelj: Plemelj::for_grid(&g)?,
            opts,
        })
    }

    pub fn options(&self) -> &RhOptions {
        &self.opts
    }

    fn neumann_row(&self, s: &JumpMatrix, row: usize) -> RowResult {
        let n = s.s11.len();
        let (r1, r2): (&[Complex64], Option<&[Complex64]>) = if row == 0 {
            (&s.s11, Some(&s.s12))
        } else {
            (&s.s21, None)
        };
        // start from the leading Neumann term P⁻(s); sweeps are counted after it
        let mut p1 = self.plemelj.apply(r1, Side::Minus);
        let mut p2 = match r2 {
            Some(r) => self.plemelj.apply(r, Side::Minus),
            None => vec![ZERO; n],
        };
        // updates are measured against the iterate or the data, whichever is larger, so a row whose
        // solution is tiny (far from the potential) stops at the round-off floor of the data
        let data_scale = sup(r1).max(r2.map_or(0.0, sup));
        let mut buf1 = vec![ZERO; n];
        let mut buf2 = vec![ZERO; n];
        for it in 1..=self.opts.max_iter {
            for i in 0..n {
                buf1[i] = p1[i] * s.s11[i] + p2[i] * s.s21[i] + r1[i];
                buf2[i] = p1[i] * s.s12[i] + r2.map_or(ZERO, |r| r[i]);
            }
            let n1 = self.plemelj.apply(&buf1, Side::Minus);
            let n2 = self.plemelj.apply(&buf2, Side::Minus);
            let update = sup_diff(&n1, &p1).max(sup_diff(&n2, &p2));
            let size = sup(&n1).max(sup(&n2)).max(data_scale);
            p1 = n1;
            p2 = n2;
            if !update.is_finite() {
                break;
            }
            if update <= self.opts.tol * size || update == 0.0 {
                return RowResult {
                    p1,
                    p2,
                    iterations: it,
                    converged: true,
                };
            }
        }
        RowResult {
            p1,
            p2,
            iterations: self.opts.max_iter,
            converged: false,
        }
    }

    /// Both rows from one LU factorization of `I − [[P⁻D(S11), P⁻D(S21)], [P⁻D(S12), 0]]`.
    fn dense(&self, s: &JumpMatrix) -> Result<[RowResult; 2]> {
        let n = s.s11.len();
        let pm = dense_minus_projection(n);
        let mut a = DMatrix::<Complex64>::identity(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let p = pm[(i, j)];
                a[(i, j)] -= p * s.s11[j];
                a[(i, n + j)] -= p * s.s21[j];
                a[(n + i, j)] -= p * s.s12[j];
            }
        }
        let mut rhs = DMatrix::<Complex64>::zeros(2 * n, 2);
        let ps11 = self.plemelj.apply(&s.s11, Side::Minus);
        let ps12 = self.plemelj.apply(&s.s12, Side::Minus);
        let ps21 = self.plemelj.apply(&s.s21, Side::Minus);
        for i in 0..n {
            rhs[(i, 0)] = ps11[i];
            rhs[(n + i, 0)] = ps12[i];
            rhs[(i, 1)] = ps21[i];
        }
        let lu: LU<Complex64, Dyn, Dyn> = a.lu();
        let sol = lu.solve(&rhs).ok_or_else(|| IstError::Singular {
            x: s.x,
            reason: "dense factorization of I - P⁻(·S) is singular".into(),
        })?;
        if sol.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(IstError::Singular {
                x: s.x,
                reason: "dense solve produced non-finite values".into(),
            });
        }
        let col = |c: usize, off: usize| (0..n).map(|i| sol[(off + i, c)]).collect::<Vec<_>>();
        Ok([
            RowResult {
                p1: col(0, 0),
                p2: col(0, n),
                iterations: 0,
                converged: true,
            },
            RowResult {
                p1: col(1, 0),
                p2: col(1, n),
                iterations: 0,
                converged: true,
            },
        ])
    }

    pub fn solve(&self, x: f64) -> Result<RhSolution> {
        let s = build_jump(self.reflection, x);
        let (rows, method) = if self.opts.force_dense {
            (self.dense(&s)?, SolveMethod::Dense)
        } else {
            let r0 = self.neumann_row(&s, 0);
            let r1 = self.neumann_row(&s, 1);
            if r0.converged && r1.converged {
                ([r0, r1], SolveMethod::Neumann)
            } else if self.opts.dense_fallback {
                (self.dense(&s)?, SolveMethod::Dense)
            } else {
                return Err(IstError::Singular {
                    x,
                    reason: format!(
                        "Neumann iteration did not reach {:e} in {} iterations and the dense fallback is disabled",
                        self.opts.tol, self.opts.max_iter
                    ),
                });
            }
        };
        let [r0, r1] = rows;
        let psi_minus = MatrixField {
            e11: r0.p1,
            e12: r0.p2,
            e21: r1.p1,
            e22: r1.p2,
        };
        Ok(self.finish(&s, psi_minus, [r0.iterations, r1.iterations], method))
    }

    fn finish(&self, s: &JumpMatrix, psi_minus: MatrixField, iterations: [usize; 2], method: SolveMethod) -> RhSolution {
        let psi_plus = plus_from_minus(&self.plemelj, &psi_minus, s);
        let jump_residual = residual_of(&psi_minus, &psi_plus, s);
        let mu_minus_1 = psi_minus.e11.iter().map(|v| 1.0 + v).collect();
        let nu_plus_2 = psi_plus.e22.iter().map(|v| 1.0 + v).collect();
        RhSolution {
            x: s.x,
            kgrid: s.kgrid,
            psi_minus,
            psi_plus,
            mu_minus_1,
            nu_plus_2,
            jump_residual,
            iterations,
            method,
        }
    }

    /// Neumann iteration on the full 2×2 unknown, without using the row structure.
    pub fn solve_full(&self, x: f64) -> Result<RhSolution> {
        let s = build_jump(self.reflection, x);
        let n = s.s11.len();
        let mut psi = MatrixField::zeros(n);
        for it in 1..=self.opts.max_iter {
            let mut t = MatrixField::zeros(n);
            for i in 0..n {
                let m = matmul(psi.entry(i), s.entry(i));
                let e = s.entry(i);
                t.e11[i] = m[0][0] + e[0][0];
                t.e12[i] = m[0][1] + e[0][1];
                t.e21[i] = m[1][0] + e[1][0];
                t.e22[i] = m[1][1] + e[1][1];
            }
            let next = MatrixField {
                e11: self.plemelj.apply(&t.e11, Side::Minus),
                e12: self.plemelj.apply(&t.e12, Side::Minus),
                e21: self.plemelj.apply(&t.e21, Side::Minus),
                e22: self.plemelj.apply(&t.e22, Side::Minus),
            };
            let update = [
                sup_diff(&next.e11, &psi.e11),
                sup_diff(&next.e12, &psi.e12),
                sup_diff(&next.e21, &psi.e21),
                sup_diff(&next.e22, &psi.e22),
            ]
            .into_iter()
            .fold(0.0, f64::max);
            let size = next.sup_norm();
            psi = next;
            if update <= self.opts.tol * size || update == 0.0 {
                return Ok(self.finish(&s, psi, [it, it], SolveMethod::Neumann));
            }
            if !update.is_finite() {
                break;
            }
        }
        Err(IstError::Singular {
            x,
            reason: "full-matrix Neumann iteration did not converge".into(),
        })
    }
}

/// Dense matrix of `P⁻ = ½(−I + iH)` for `n` lattice nodes.
fn dense_minus_projection(n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |i, j| {
        let d = i as i64 - j as i64;
        if d == 0 {
            Complex64::new(-0.5, 0.0)
        } else if d % 2 != 0 {
            Complex64::new(0.0, 1.0 / (std::f64::consts::PI * d as f64))
        } else {
            ZERO
        }
    })
}

fn plus_from_minus(p: &Plemelj, psi: &MatrixField, s: &JumpMatrix) -> MatrixField {
    let n = psi.len();
    let mut t = MatrixField::zeros(n);
    for i in 0..n {
        let m = matmul(psi.entry(i), s.entry(i));
        let e = s.entry(i);
        t.e11[i] = m[0][0] + e[0][0];
        t.e12[i] = m[0][1] + e[0][1];
        t.e21[i] = m[1][0] + e[1][0];
        t.e22[i] = m[1][1] + e[1][1];
    }
    MatrixField {
        e11: p.apply(&t.e11, Side::Plus),
        e12: p.apply(&t.e12, Side::Plus),
        e21: p.apply(&t.e21, Side::Plus),
        e22: p.apply(&t.e22, Side::Plus),
    }
}

/// `max_k ‖M₊ − M₋ − M₋S‖_F` with `M± = I + Ψ±`.
fn residual_of(psi_minus: &MatrixField, psi_plus: &MatrixField, s: &JumpMatrix) -> f64 {
    let id = [[Complex64::new(1.0, 0.0), ZERO], [ZERO, Complex64::new(1.0, 0.0)]];
    (0..psi_minus.len())
        .map(|i| {
            let mm = psi_minus.entry(i);
            let mp = psi_plus.entry(i);
            let m_minus = [[id[0][0] + mm[0][0], mm[0][1]], [mm[1][0], id[1][1] + mm[1][1]]];
            let ms = matmul(m_minus, s.entry(i));
            let mut r = [[ZERO; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    r[a][b] = mp[a][b] - mm[a][b] - ms[a][b];
                }
            }
            frob(r)
        })
        .fold(0.0, f64::max)
}

pub fn solve_rh(reflection: &ReflectionPair, x: f64, opts: RhOptions) -> Result<RhSolution> {
    RhSolver::new(reflection, opts)?.solve(x)
}

pub fn solve_rh_full(reflection: &ReflectionPair, x: f64, opts: RhOptions) -> Result<RhSolution> {
    RhSolver::new(reflection, opts)?.solve_full(x)
}

/// Jump residual of a stored solution against a jump matrix.
pub fn jump_residual(solution: &RhSolution, jump: &JumpMatrix) -> Result<f64> {
    if !solution.kgrid.same_as(&jump.kgrid) || solution.x != jump.x {
        return Err(IstError::GridMismatch(format!(
            "solution at x = {} and jump at x = {} do not share their grids",
            solution.x, jump.x
        )));
    }
    Ok(residual_of(&solution.psi_minus, &solution.psi_plus, jump))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub mu_plus_min: f64,
    pub mu_minus_min: f64,
    pub c_minus_estimate: f64,
    /// `max_k |μ₊μ₋ − (1 + σRe(r1r2) − |r1 + σ conj(r2)|²/4)|`
    pub determinant_residual: f64,
}

/// Eigenvalues `(μ₊, μ₋)` of `I + S_H` at one k.
pub fn hermitian_part_eigenvalues(r1: Complex64, r2: Complex64, sigma: f64) -> (f64, f64) {
    let re = (r1 * r2).re;
    let w = r1 + sigma * r2.conj();
    let root = (re * re + w.norm_sqr()).sqrt();
    (0.5 * (2.0 + sigma * re + root), 0.5 * (2.0 + sigma * re - root))
}

pub fn positivity_diagnostics(reflection: &ReflectionPair) -> PositivityReport {
    let sigma = reflection.sigma.value();
    let mut out = PositivityReport {
        mu_plus_min: f64::INFINITY,
        mu_minus_min: f64::INFINITY,
        c_minus_estimate: 0.0,
        determinant_residual: 0.0,
    };
    for (r1, r2) in reflection.r1.iter().zip(&reflection.r2) {
        let (mp, mm) = hermitian_part_eigenvalues(*r1, *r2, sigma);
        out.mu_plus_min = out.mu_plus_min.min(mp);
        out.mu_minus_min = out.mu_minus_min.min(mm);
        let det = 1.0 + sigma * (r1 * r2).re - 0.25 * (r1 + sigma * r2.conj()).norm_sqr();
        out.determinant_residual = out.determinant_residual.max((mp * mm - det).abs());
    }
    out.c_minus_estimate = out.mu_minus_min;
    out
}

impl PositivityReport {
    pub fn to_report(&self) -> DiagnosticsReport {
        let mut r = DiagnosticsReport::new();
        r.push(DiagnosticItem::at_least(
            "mu_minus_min",
            self.mu_minus_min,
            f64::MIN_POSITIVE,
            "I + S_H is positive definite: c_- > 0",
        ));
        r.push(DiagnosticItem::report("mu_plus_min", self.mu_plus_min, "eigenvalues of I + S_H"));
        r.push(DiagnosticItem::at_most(
            "mu_product_residual",
            self.determinant_residual,
            1e-12,
            "mu_+ mu_- equals det(I + S_H)",
        ));
        r
    }
}

/// Flat CSV of `Ψ₋` with header `x,k_index,re_11,im_11,re_12,im_12,re_21,im_21,re_22,im_22`.
pub fn psi_minus_csv(solutions: &[RhSolution]) -> String {
    let mut out = String::from("x,k_index,re_11,im_11,re_12,im_12,re_21,im_21,re_22,im_22\n");
    for s in solutions {
        for i in 0..s.psi_minus.len() {
            let m = s.psi_minus.entry(i);
            out.push_str(&format!(
                "{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                s.x, i, m[0][0].re, m[0][0].im, m[0][1].re, m[0][1].im, m[1][0].re, m[1][0].im, m[1][1].re,
                m[1][1].im
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scattering::{reflection_coefficients, scattering_coefficients, Potential, Sigma};
    use proptest::prelude::*;

    fn kgrid(n: usize) -> UniformGrid {
        UniformGrid::symmetric(24.0, n).unwrap()
    }

    fn max_entry_diff(a: &MatrixField, b: &MatrixField) -> f64 {
        [(&a.e11, &b.e11), (&a.e12, &b.e12), (&a.e21, &b.e21), (&a.e22, &b.e22)]
            .iter()
            .map(|(u, v)| sup_diff(u, v))
            .fold(0.0, f64::max)
    }

    fn gaussian_reflection(sigma: Sigma, center: f64, nk: usize) -> ReflectionPair {
        scaled_gaussian_reflection(sigma, 0.08, center, nk)
    }

    fn scaled_gaussian_reflection(sigma: Sigma, amp: f64, center: f64, nk: usize) -> ReflectionPair {
        let xg = UniformGrid::symmetric(16.0, 512).unwrap();
        let p = Potential::gaussian(xg, sigma, amp, center).unwrap();
        reflection_coefficients(&scattering_coefficients(&p, &kgrid(nk)).unwrap()).unwrap()
    }

    #[test]
    fn zero_jump() {
        let r = ReflectionPair::zero(kgrid(256), Sigma::Plus).unwrap();
        let s = build_jump(&r, 0.4);
        assert!(s.s11.iter().chain(&s.s12).chain(&s.s21).all(|v| *v == ZERO));
        let sol = solve_rh(&r, 0.4, RhOptions::default()).unwrap();
        assert_eq!(sol.psi_minus.sup_norm(), 0.0);
        assert_eq!(sol.psi_plus.sup_norm(), 0.0);
        assert_eq!(sol.jump_residual, 0.0);
        assert!(sol.mu_minus_1.iter().all(|v| *v == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn nilpotent_jump_closes_in_two_steps() {
        let g = kgrid(512);
        for sigma in [Sigma::Plus, Sigma::Minus] {
            let r = ReflectionPair::from_fns(
                g,
                sigma,
                |k| Complex64::new(0.3 * (-k * k).exp(), 0.1 * k * (-k * k).exp()),
                |_| ZERO,
            )
            .unwrap();
            let s = build_jump(&r, -0.7);
            assert_eq!(s.square_norm(), 0.0);
            let sol = solve_rh(&r, -0.7, RhOptions::default()).unwrap();
            assert!(sol.iterations.iter().all(|&i| i <= 2));
            assert!(sol.jump_residual <= 1e-10);
            assert!(sol.mu_minus_1.iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        }
    }

    #[test]
    fn box_jump_at_origin() {
        let xg = UniformGrid::symmetric(2.0, 4097).unwrap();
        let p = Potential::boxcar(xg, Sigma::Plus, 0.1, 0.0, 1.0).unwrap();
        let kg = UniformGrid::symmetric(2.0, 65).unwrap();
        let r = reflection_coefficients(&scattering_coefficients(&p, &kg).unwrap()).unwrap();
        let s = build_jump(&r, 0.0);
        let i = kg.nearest(0.0);
        let (r1, r2) = (-0.1 / 0.99, -0.1);
        let e = s.entry(i);
        assert!((e[0][0] - Complex64::new(r1 * r2, 0.0)).norm() < 1e-6);
        assert!((e[0][1] - Complex64::new(r2, 0.0)).norm() < 1e-6);
        assert!((e[1][0] - Complex64::new(r1, 0.0)).norm() < 1e-6);
        assert_eq!(e[1][1], ZERO);
    }

    #[test]
    fn gaussian_solve_contracts_quickly() {
        // the contraction factor is about sup|r|, so 1e-10 needs about 10 sweeps at sup|r| = 0.1
        let small = scaled_gaussian_reflection(Sigma::Plus, 0.056, 0.0, 1024);
        assert!((small.sup_r - 0.1).abs() < 0.01, "{}", small.sup_r);
        let sol = solve_rh(&small, 0.3, RhOptions::default()).unwrap();
        assert!(sol.iterations.iter().all(|&i| i <= 10), "{:?}", sol.iterations);
        let r = gaussian_reflection(Sigma::Plus, 0.0, 1024);
        assert!(r.sup_r < 0.2);
        let sol = solve_rh(&r, 0.3, RhOptions::default()).unwrap();
        assert_eq!(sol.method, SolveMethod::Neumann);
        assert!(sol.jump_residual <= 1e-8);
        let jump = build_jump(&r, 0.3);
        assert_eq!(jump_residual(&sol, &jump).unwrap(), sol.jump_residual);
        let mut bad = sol.clone();
        bad.psi_minus = sol.psi_minus.scaled(2.0);
        assert!(jump_residual(&bad, &jump).unwrap() > sol.jump_residual);
        assert!(matches!(
            jump_residual(&sol, &build_jump(&r, 0.4)),
            Err(IstError::GridMismatch(_))
        ));
    }

    #[test]
    fn rows_match_full_solve() {
        let r = gaussian_reflection(Sigma::Minus, 0.5, 512);
        let opts = RhOptions {
            tol: 1e-14,
            ..RhOptions::default()
        };
        let rows = solve_rh(&r, -1.1, opts).unwrap();
        let full = solve_rh_full(&r, -1.1, opts).unwrap();
        let diff = max_entry_diff(&rows.psi_minus, &full.psi_minus);
        assert!(diff <= 1e-12, "{diff}");
    }

    #[test]
    fn dense_path_agrees_with_neumann() {
        let r = gaussian_reflection(Sigma::Plus, 0.5, 128);
        let it = solve_rh(&r, 0.2, RhOptions::default()).unwrap();
        let dense = solve_rh(
            &r,
            0.2,
            RhOptions {
                force_dense: true,
                ..RhOptions::default()
            },
        )
        .unwrap();
        assert_eq!(dense.method, SolveMethod::Dense);
        let diff = max_entry_diff(&it.psi_minus, &dense.psi_minus);
        assert!(diff < 1e-10, "{diff}");
        assert!(dense.jump_residual < 1e-12);
    }

    #[test]
    fn fallback_kicks_in_when_neumann_is_starved() {
        let r = gaussian_reflection(Sigma::Plus, 0.0, 128);
        let opts = RhOptions {
            max_iter: 1,
            ..RhOptions::default()
        };
        let sol = solve_rh(&r, 0.0, opts).unwrap();
        assert_eq!(sol.method, SolveMethod::Dense);
        let strict = RhOptions {
            dense_fallback: false,
            ..opts
        };
        let err = solve_rh(&r, 0.0, strict).unwrap_err();
        assert!(matches!(err, IstError::Singular { .. }) && err.is_numerical());
    }

    #[test]
    fn positivity() {
        let z = ReflectionPair::zero(kgrid(64), Sigma::Plus).unwrap();
        let p = positivity_diagnostics(&z);
        assert_eq!((p.mu_plus_min, p.mu_minus_min), (1.0, 1.0));
        for sigma in [Sigma::Plus, Sigma::Minus] {
            let r = gaussian_reflection(sigma, 0.5, 256);
            let p = positivity_diagnostics(&r);
            assert!(p.mu_minus_min > 0.0);
            assert!(p.determinant_residual <= 1e-12);
            assert!(p.to_report().overall);
        }
    }

    #[test]
    fn csv_dump() {
        let r = gaussian_reflection(Sigma::Plus, 0.0, 64);
        let sols: Vec<_> = [0.0, 1.0].iter().map(|&x| solve_rh(&r, x, RhOptions::default()).unwrap()).collect();
        let csv = psi_minus_csv(&sols);
        assert_eq!(csv.lines().count(), 1 + 128);
        assert!(csv.lines().nth(1).unwrap().split(',').count() == 10);
    }

    proptest! {
        #[test]
        fn eigenvalue_product_matches_determinant(
            a in -0.9f64..0.9, b in -0.9f64..0.9, c in -0.9f64..0.9, d in -0.9f64..0.9, plus in any::<bool>()
        ) {
            let sigma = if plus { 1.0 } else { -1.0 };
            let (r1, r2) = (Complex64::new(a, b), Complex64::new(c, d));
            let (mp, mm) = hermitian_part_eigenvalues(r1, r2, sigma);
            // I + S_H with S_H = (S + S^*)/2 at x = 0
            let h11 = 1.0 + sigma * (r1 * r2).re;
            let off = 0.5 * (sigma * r2 + r1.conj());
            let det = h11 - off.norm_sqr();
            prop_assert!((mp * mm - det).abs() <= 1e-12);
            prop_assert!((mp + mm - (h11 + 1.0)).abs() <= 1e-12);
        }
    }
}
