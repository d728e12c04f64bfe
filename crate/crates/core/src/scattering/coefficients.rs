use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::jost::{det2, JostKind, Marcher};
use super::potential::{Potential, Sigma, SMALL_NORM_THRESHOLD};
use crate::diagnostics::{DiagnosticItem, DiagnosticsReport};
use crate::error::{IstError, Result};
use crate::numerics::{complex_pairs, from_pairs, trapezoid, UniformGrid};

/// Default bound on the determinant and symmetry residuals at reference resolution.
pub const DEFAULT_TOL_IDENTITY: f64 = 1e-6;
/// Smallest admissible `|a|`, `|d|` before division.
pub const DIVISION_FLOOR: f64 = 1e-12;

/// `1 − e^{1/3}/6`, the lower bound on `|a|` and `|d|` in the small-norm regime.
pub fn resonance_floor() -> f64 {
    1.0 - (1.0f64 / 3.0).exp() / 6.0
}

/// `(1 + e^{1/3})/6 / (1 − e^{1/3}/6)`, the small-norm bound on `|r1|`, `|r2|`.
pub fn reflection_bound() -> f64 {
    (1.0 + (1.0f64 / 3.0).exp()) / 6.0 / resonance_floor()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScatteringResiduals {
    /// `max |a d + σ b conj(b(-k)) − 1|`
    pub determinant: f64,
    /// `max |conj(a(-k)) − a(k)|`
    pub symmetry_a: f64,
    /// `max |conj(d(-k)) − d(k)|`
    pub symmetry_d: f64,
    /// Largest disagreement between the integral forms and the Wronskians at the node nearest 0.
    pub wronskian: f64,
    /// `max(|a − 1|, |d − 1|, |b|)` at the two end nodes.
    pub tail: f64,
    /// `tail` at the half-way nodes `±k_max/2`, for the decay-rate check.
    pub tail_half: f64,
}

/// Samples of `a`, `b`, `c`, `d` on a symmetric real k-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringData {
    pub kgrid: UniformGrid,
    pub sigma: Sigma,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    /// `c(k) = −σ conj(b(−k))`, never computed independently.
    pub c: Vec<Complex64>,
    pub d: Vec<Complex64>,
    pub residuals: ScatteringResiduals,
    /// Set when the determinant residual exceeds the tolerance the data was built with.
    pub flagged: bool,
    pub small_norm: bool,
}

#[derive(Serialize, Deserialize)]
struct ScatteringRepr {
    kgrid: UniformGrid,
    sigma: Sigma,
    a: Vec<[f64; 2]>,
    b: Vec<[f64; 2]>,
    c: Vec<[f64; 2]>,
    d: Vec<[f64; 2]>,
    residuals: ScatteringResiduals,
    flagged: bool,
    small_norm: bool,
}

impl Serialize for ScatteringData {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ScatteringRepr {
            kgrid: self.kgrid,
            sigma: self.sigma,
            a: complex_pairs(&self.a),
            b: complex_pairs(&self.b),
            c: complex_pairs(&self.c),
            d: complex_pairs(&self.d),
            residuals: self.residuals,
            flagged: self.flagged,
            small_norm: self.small_norm,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ScatteringData {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let r = ScatteringRepr::deserialize(d)?;
        let n = r.kgrid.len();
        if [r.a.len(), r.b.len(), r.c.len(), r.d.len()].iter().any(|&l| l != n) {
            return Err(D::Error::custom("coefficient arrays do not match the k-grid"));
        }
        Ok(ScatteringData {
            kgrid: r.kgrid,
            sigma: r.sigma,
            a: from_pairs(&r.a),
            b: from_pairs(&r.b),
            c: from_pairs(&r.c),
            d: from_pairs(&r.d),
            residuals: r.residuals,
            flagged: r.flagged,
            small_norm: r.small_norm,
        })
    }
}

struct PerK {
    a: Complex64,
    b: Complex64,
    d: Complex64,
    wronskian: f64,
}

fn coefficients_at(m: &Marcher, q: &[Complex64], grid: &UniformGrid, sigma: f64, k: f64) -> PerK {
    let kc = Complex64::new(k, 0.0);
    let h = grid.spacing();
    let p = m.reflected();
    let phi_m = m.march(kc, JostKind::PhiMinus);
    let psi_m = m.march(kc, JostKind::PsiMinus);

    let ia: Vec<Complex64> = q.iter().zip(&phi_m).map(|(qv, v)| qv * v[1]).collect();
    let ib: Vec<Complex64> = (0..q.len())
        .map(|i| Complex64::from_polar(1.0, -2.0 * k * grid.node(i)) * p[i] * phi_m[i][0])
        .collect();
    let id: Vec<Complex64> = p.iter().zip(&psi_m).map(|(pv, v)| pv * v[0]).collect();
    let a = 1.0 + trapezoid(&ia, h);
    let b = -sigma * trapezoid(&ib, h);
    let d = 1.0 - sigma * trapezoid(&id, h);

    let phi_p = m.march(kc, JostKind::PhiPlus);
    let psi_p = m.march(kc, JostKind::PsiPlus);
    let i0 = grid.nearest(0.0);
    let w = m.wronskian_weight(i0);
    let aw = det2(phi_m[i0], psi_p[i0]) * w;
    let bw = Complex64::from_polar(1.0, -2.0 * k * grid.node(i0)) * det2(phi_p[i0], phi_m[i0]) * w;
    let dw = det2(phi_p[i0], psi_m[i0]) * w;
    let wronskian = (a - aw).norm().max((b - bw).norm()).max((d - dw).norm());
    PerK { a, b, d, wronskian }
}

/// Scattering coefficients from the integral expressions, with a determinant tolerance.
pub fn scattering_coefficients_with(
    potential: &Potential,
    kgrid: &UniformGrid,
    tol_det: f64,
) -> Result<ScatteringData> {
    kgrid.require_symmetric("the k-grid of scattering data")?;
    let m = Marcher::new(potential)?;
    let q = potential.values();
    let xgrid = potential.grid();
    let sigma = potential.sigma().value();
    let ks = kgrid.nodes();
    let per: Vec<PerK> = ks
        .par_iter()
        .map(|&k| coefficients_at(&m, q, xgrid, sigma, k))
        .collect();

    let a: Vec<Complex64> = per.iter().map(|p| p.a).collect();
    let b: Vec<Complex64> = per.iter().map(|p| p.b).collect();
    let d: Vec<Complex64> = per.iter().map(|p| p.d).collect();
    let n = ks.len();
    let c: Vec<Complex64> = (0..n).map(|i| -sigma * b[n - 1 - i].conj()).collect();

    let mut res = ScatteringResiduals::default();
    for i in 0..n {
        let j = n - 1 - i;
        res.determinant = res
            .determinant
            .max((a[i] * d[i] + sigma * b[i] * b[j].conj() - 1.0).norm());
        res.symmetry_a = res.symmetry_a.max((a[j].conj() - a[i]).norm());
        res.symmetry_d = res.symmetry_d.max((d[j].conj() - d[i]).norm());
        res.wronskian = res.wronskian.max(per[i].wronskian);
    }
    let tail_at = |i: usize| (a[i] - 1.0).norm().max((d[i] - 1.0).norm()).max(b[i].norm());
    res.tail = tail_at(0).max(tail_at(n - 1));
    res.tail_half = tail_at(kgrid.nearest(-0.5 * kgrid.max_abs())).max(tail_at(kgrid.nearest(0.5 * kgrid.max_abs())));

    Ok(ScatteringData {
        kgrid: *kgrid,
        sigma: potential.sigma(),
        a,
        b,
        c,
        d,
        flagged: !(res.determinant <= tol_det),
        residuals: res,
        small_norm: potential.small_norm(),
    })
}

pub fn scattering_coefficients(potential: &Potential, kgrid: &UniformGrid) -> Result<ScatteringData> {
    scattering_coefficients_with(potential, kgrid, DEFAULT_TOL_IDENTITY)
}

impl ScatteringData {
    pub fn min_abs_a(&self) -> f64 {
        self.a.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn min_abs_d(&self) -> f64 {
        self.d.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
    }

    /// `C` in `tail ≤ C/k_max`, fitted from the end nodes and the half-way nodes.
    pub fn tail_constant(&self) -> f64 {
        let kmax = self.kgrid.max_abs();
        (kmax * self.residuals.tail).max(0.5 * kmax * self.residuals.tail_half)
    }
}

/// Reflection coefficients with time stamp and provenance flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionPair {
    pub kgrid: UniformGrid,
    pub sigma: Sigma,
    pub r1: Vec<Complex64>,
    pub r2: Vec<Complex64>,
    pub t: f64,
    pub sup_r: f64,
    /// `true` when produced from a potential; hand-built pairs are not known to be realizable.
    pub realizable: bool,
    /// Small-norm flag of the generating potential, if any.
    pub small_norm: Option<bool>,
}

#[derive(Serialize, Deserialize)]
struct ReflectionRepr {
    kgrid: UniformGrid,
    sigma: Sigma,
    t: f64,
    sup_r: f64,
    realizable: bool,
    #[serde(default)]
    small_norm: Option<bool>,
    r1: Vec<[f64; 2]>,
    r2: Vec<[f64; 2]>,
}

impl Serialize for ReflectionPair {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ReflectionRepr {
            kgrid: self.kgrid,
            sigma: self.sigma,
            t: self.t,
            sup_r: self.sup_r,
            realizable: self.realizable,
            small_norm: self.small_norm,
            r1: complex_pairs(&self.r1),
            r2: complex_pairs(&self.r2),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ReflectionPair {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let r = ReflectionRepr::deserialize(d)?;
        let mut pair = ReflectionPair::new(r.kgrid, r.sigma, from_pairs(&r.r1), from_pairs(&r.r2))
            .map_err(D::Error::custom)?;
        if !(r.t >= 0.0) {
            return Err(D::Error::custom(format!("negative time stamp {}", r.t)));
        }
        pair.t = r.t;
        pair.realizable = r.realizable;
        pair.small_norm = r.small_norm;
        Ok(pair)
    }
}

fn sup_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl ReflectionPair {
    /// Hand-built pair at `t = 0`, marked non-realizable.
    pub fn new(kgrid: UniformGrid, sigma: Sigma, r1: Vec<Complex64>, r2: Vec<Complex64>) -> Result<Self> {
        if r1.len() != kgrid.len() || r2.len() != kgrid.len() {
            return Err(IstError::RejectedInput(format!(
                "reflection arrays of length {} and {} for a k-grid of {} nodes",
                r1.len(),
                r2.len(),
                kgrid.len()
            )));
        }
        if r1.iter().chain(&r2).any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(IstError::RejectedInput("non-finite reflection sample".into()));
        }
        kgrid.require_symmetric("reflection data")?;
        let sup_r = sup_abs(&r1).max(sup_abs(&r2));
        Ok(Self {
            kgrid,
            sigma,
            r1,
            r2,
            t: 0.0,
            sup_r,
            realizable: false,
            small_norm: None,
        })
    }

    pub fn zero(kgrid: UniformGrid, sigma: Sigma) -> Result<Self> {
        let z = vec![Complex64::new(0.0, 0.0); kgrid.len()];
        Self::new(kgrid, sigma, z.clone(), z)
    }

    /// Reflection pair built from samples of two functions of k.
    pub fn from_fns(
        kgrid: UniformGrid,
        sigma: Sigma,
        r1: impl Fn(f64) -> Complex64,
        r2: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        let ks = kgrid.nodes();
        Self::new(
            kgrid,
            sigma,
            ks.iter().map(|&k| r1(k)).collect(),
            ks.iter().map(|&k| r2(k)).collect(),
        )
    }

    /// CSV with header `k,re_r1,im_r1,re_r2,im_r2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,re_r1,im_r1,re_r2,im_r2\n");
        for i in 0..self.kgrid.len() {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                self.kgrid.node(i),
                self.r1[i].re,
                self.r1[i].im,
                self.r2[i].re,
                self.r2[i].im
            ));
        }
        out
    }
}

/// `r1 = b/a`, `r2 = conj(b(−k))/d` on the grid of the data.
pub fn reflection_coefficients(data: &ScatteringData) -> Result<ReflectionPair> {
    let n = data.kgrid.len();
    for (name, v) in [("a", &data.a), ("d", &data.d)] {
        if let Some(i) = v.iter().position(|z| z.norm() < DIVISION_FLOOR) {
            return Err(IstError::DivisionHazard(format!(
                "|{name}(k)| = {:e} at k = {} (resonance or violated small-norm assumption)",
                v[i].norm(),
                data.kgrid.node(i)
            )));
        }
    }
    let r1: Vec<Complex64> = (0..n).map(|i| data.b[i] / data.a[i]).collect();
    let r2: Vec<Complex64> = (0..n).map(|i| data.b[n - 1 - i].conj() / data.d[i]).collect();
    let mut pair = ReflectionPair::new(data.kgrid, data.sigma, r1, r2)?;
    pair.realizable = true;
    pair.small_norm = Some(data.small_norm);
    if data.small_norm && pair.sup_r >= 1.0 {
        return Err(IstError::Instability(format!(
            "sup |r| = {} >= 1 for a small-norm potential",
            pair.sup_r
        )));
    }
    Ok(pair)
}

/// Boundary values of the RH matrix built from Jost solutions at one x-node.
#[derive(Debug, Clone, PartialEq)]
pub struct JostMatrices {
    /// The node actually used (the grid node nearest the requested x).
    pub x: f64,
    /// `[φ₋/a, ϕ₊]` column-wise, one 2×2 matrix per k.
    pub m_plus: Vec<[[Complex64; 2]; 2]>,
    /// `[φ₊, ϕ₋/d]` column-wise.
    pub m_minus: Vec<[[Complex64; 2]; 2]>,
}

/// Jost-built boundary values `M±` on the real k-grid of `data`.
pub fn jost_rh_matrices(potential: &Potential, data: &ScatteringData, x: f64) -> Result<JostMatrices> {
    let m = Marcher::new(potential)?;
    let i = potential.grid().nearest(x);
    let ks = data.kgrid.nodes();
    let pairs: Vec<_> = ks
        .par_iter()
        .enumerate()
        .map(|(j, &k)| {
            let kc = Complex64::new(k, 0.0);
            let phi_m = m.march(kc, JostKind::PhiMinus)[i];
            let psi_p = m.march(kc, JostKind::PsiPlus)[i];
            let phi_p = m.march(kc, JostKind::PhiPlus)[i];
            let psi_m = m.march(kc, JostKind::PsiMinus)[i];
            let (a, d) = (data.a[j], data.d[j]);
            let plus = [[phi_m[0] / a, psi_p[0]], [phi_m[1] / a, psi_p[1]]];
            let minus = [[phi_p[0], psi_m[0] / d], [phi_p[1], psi_m[1] / d]];
            (plus, minus)
        })
        .collect();
    let (m_plus, m_minus) = pairs.into_iter().unzip();
    Ok(JostMatrices {
        x: potential.grid().node(i),
        m_plus,
        m_minus,
    })
}

/// Small-norm and resonance-floor checks for data computed from `potential`.
pub fn no_resonance_check(potential: &Potential, data: &ScatteringData) -> DiagnosticsReport {
    let mut r = DiagnosticsReport::new();
    r.push(DiagnosticItem::at_most(
        "l1_norm_unit",
        potential.l1_norm(),
        1.0,
        "Jost existence hypothesis ||q||_1 < 1",
    ));
    r.push(DiagnosticItem::at_most(
        "l1_norm",
        potential.l1_norm(),
        SMALL_NORM_THRESHOLD,
        "small-norm hypothesis ||q||_1 < 1/6",
    ));
    if !potential.small_norm() {
        r.warn(format!(
            "||q||_1 = {:.6} exceeds 1/6: resonance exclusion and |r| < 1 are not guaranteed",
            potential.l1_norm()
        ));
    }
    let floor = resonance_floor();
    let (ma, md) = (data.min_abs_a(), data.min_abs_d());
    if potential.small_norm() {
        r.push(DiagnosticItem::at_least("min_abs_a", ma, floor, "no resonances: |a| >= 1 - e^{1/3}/6"));
        r.push(DiagnosticItem::at_least("min_abs_d", md, floor, "no resonances: |d| >= 1 - e^{1/3}/6"));
    } else {
        r.push(DiagnosticItem::report("min_abs_a", ma, "no resonances: |a| >= 1 - e^{1/3}/6"));
        r.push(DiagnosticItem::report("min_abs_d", md, "no resonances: |d| >= 1 - e^{1/3}/6"));
    }
    r
}
