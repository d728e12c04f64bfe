//! Named invariant checks with tolerances, and the aggregated report.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{IstError, Result};
use crate::numerics::{weighted_norm_values, NormKind, SampledField, UniformGrid};
use crate::plemelj::operator_norm_check;
use crate::reconstruction::reconstruct_q;
use crate::rh::{positivity_diagnostics, RhOptions};
use crate::scattering::{
    no_resonance_check, reflection_bound, reflection_coefficients, scattering_coefficients_with, Potential,
    ReflectionPair, ScatteringData,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Passes when `value <= tolerance`.
    AtMost,
    /// Passes when `value >= tolerance`.
    AtLeast,
    /// Informational; always passes.
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticItem {
    pub name: String,
    pub value: f64,
    pub tolerance: Option<f64>,
    pub comparison: Comparison,
    pub pass: bool,
    /// Identity or bound the item checks, or `plumbing` for artifact-internal checks.
    pub anchor: String,
}

impl DiagnosticItem {
    fn build(name: &str, value: f64, tolerance: Option<f64>, comparison: Comparison, anchor: &str) -> Self {
        let pass = match (comparison, tolerance) {
            (Comparison::AtMost, Some(t)) => value <= t,
            (Comparison::AtLeast, Some(t)) => value >= t,
            _ => value.is_finite() || comparison == Comparison::Report,
        };
        let anchor = if anchor.trim().is_empty() { "plumbing" } else { anchor };
        Self {
            name: name.to_string(),
            value,
            tolerance,
            comparison,
            pass,
            anchor: anchor.to_string(),
        }
    }

    pub fn at_most(name: &str, value: f64, tolerance: f64, anchor: &str) -> Self {
        Self::build(name, value, Some(tolerance), Comparison::AtMost, anchor)
    }

    pub fn at_least(name: &str, value: f64, tolerance: f64, anchor: &str) -> Self {
        Self::build(name, value, Some(tolerance), Comparison::AtLeast, anchor)
    }

    pub fn report(name: &str, value: f64, anchor: &str) -> Self {
        Self::build(name, value, None, Comparison::Report, anchor)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub items: Vec<DiagnosticItem>,
    pub overall: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl DiagnosticsReport {
    pub fn new() -> Self {
        Self {
            items: Vec::new(),
            overall: true,
            warnings: Vec::new(),
        }
    }

    pub fn push(&mut self, item: DiagnosticItem) {
        self.overall &= item.pass;
        self.items.push(item);
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn extend(&mut self, other: DiagnosticsReport) {
        for item in other.items {
            self.push(item);
        }
        self.warnings.extend(other.warnings);
    }

    pub fn get(&self, name: &str) -> Option<&DiagnosticItem> {
        self.items.iter().find(|i| i.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.get(name).map(|i| i.value)
    }

    pub fn failures(&self) -> impl Iterator<Item = &DiagnosticItem> {
        self.items.iter().filter(|i| !i.pass)
    }
}

impl fmt::Display for DiagnosticsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.items.iter().map(|i| i.name.len()).max().unwrap_or(4).max(4);
        writeln!(f, "{:<width$}  {:>12}  {:>14}  {:<4}  anchor", "name", "value", "tolerance", "ok")?;
        for i in &self.items {
            let tol = match (i.comparison, i.tolerance) {
                (Comparison::AtMost, Some(t)) => format!("<= {t:.3e}"),
                (Comparison::AtLeast, Some(t)) => format!(">= {t:.3e}"),
                _ => "-".to_string(),
            };
            writeln!(
                f,
                "{:<width$}  {:>12.4e}  {:>14}  {:<4}  {}",
                i.name,
                i.value,
                tol,
                if i.pass { "ok" } else { "FAIL" },
                i.anchor
            )?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        write!(f, "overall: {}", if self.overall { "pass" } else { "fail" })
    }
}

/// Default tolerances. Every check reads its threshold from here.
///
/// | name            | default | checks                                              |
/// |-----------------|---------|-----------------------------------------------------|
/// | `identity`      | 1e-6    | determinant and symmetry residuals of a, b, d       |
/// | `wronskian`     | 1e-10   | Wronskian vs integral forms of a, d                  |
/// | `jump`          | 1e-8    | RH jump residual of converged solves                |
/// | `neumann`       | 1e-10   | Neumann stopping tolerance (relative update)        |
/// | `roundtrip`     | 1e-3    | relative L2 error of scatter then reconstruct       |
/// | `compare`       | 1e-3    | L-infinity gap between IST and split-step solutions  |
/// | `conservation`  | 1e-8    | drift of the conserved quantity Q under split-step  |
/// | `plemelj_norm`  | 1e-12   | slack above 1 allowed for the discrete P± norms     |
/// | `positivity`    | 1e-12   | eigenvalue product vs determinant formula           |
/// | `lipschitz`     | 0.2     | relative spread of Lipschitz ratios under refinement |
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub identity: f64,
    pub wronskian: f64,
    pub jump: f64,
    pub neumann: f64,
    pub roundtrip: f64,
    pub compare: f64,
    pub conservation: f64,
    pub plemelj_norm: f64,
    pub positivity: f64,
    pub lipschitz: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: 1e-6,
            wronskian: 1e-10,
            jump: 1e-8,
            neumann: 1e-10,
            roundtrip: 1e-3,
            compare: 1e-3,
            conservation: 1e-8,
            plemelj_norm: 1e-12,
            positivity: 1e-12,
            lipschitz: 0.2,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 10] = [
        "identity",
        "wronskian",
        "jump",
        "neumann",
        "roundtrip",
        "compare",
        "conservation",
        "plemelj_norm",
        "positivity",
        "lipschitz",
    ];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name.replace('-', "_").as_str() {
            "identity" => &mut self.identity,
            "wronskian" => &mut self.wronskian,
            "jump" => &mut self.jump,
            "neumann" => &mut self.neumann,
            "roundtrip" => &mut self.roundtrip,
            "compare" => &mut self.compare,
            "conservation" => &mut self.conservation,
            "plemelj_norm" => &mut self.plemelj_norm,
            "positivity" => &mut self.positivity,
            "lipschitz" => &mut self.lipschitz,
            _ => return None,
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let mut copy = *self;
        copy.slot(name).map(|v| *v)
    }

    /// Override one tolerance by name; dashes and underscores are interchangeable.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(IstError::Configuration(format!("tolerance {name} must be positive, got {value}")));
        }
        match self.slot(name) {
            Some(v) => {
                *v = value;
                Ok(())
            }
            None => Err(IstError::Configuration(format!("unknown tolerance {name}"))),
        }
    }

    pub fn rh_options(&self) -> RhOptions {
        RhOptions {
            tol: self.neumann,
            ..RhOptions::default()
        }
    }
}

/// Invariants the suite can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Determinant,
    Symmetry,
    Wronskian,
    Tail,
    NoResonance,
    ReflectionBound,
    Positivity,
    PlemeljNorm,
}

impl Check {
    pub const ALL: [Check; 8] = [
        Check::Determinant,
        Check::Symmetry,
        Check::Wronskian,
        Check::Tail,
        Check::NoResonance,
        Check::ReflectionBound,
        Check::Positivity,
        Check::PlemeljNorm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Determinant => "determinant",
            Check::Symmetry => "symmetry",
            Check::Wronskian => "wronskian",
            Check::Tail => "tail",
            Check::NoResonance => "no_resonance",
            Check::ReflectionBound => "reflection_bound",
            Check::Positivity => "positivity",
            Check::PlemeljNorm => "plemelj_norm",
        }
    }
}

impl FromStr for Check {
    type Err = IstError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().replace('-', "_");
        Check::ALL
            .into_iter()
            .find(|c| c.name() == key)
            .ok_or_else(|| IstError::Configuration(format!("unknown invariant check {s}")))
    }
}

/// Data available to the suite. Checks that need a missing piece fail with a configuration error.
#[derive(Debug, Clone, Copy, Default)]
pub struct SuiteInputs<'a> {
    pub potential: Option<&'a Potential>,
    pub scattering: Option<&'a ScatteringData>,
    pub reflection: Option<&'a ReflectionPair>,
}

fn need<'a, T>(value: Option<&'a T>, check: Check, what: &str) -> Result<&'a T> {
    value.ok_or_else(|| IstError::Configuration(format!("check {} needs {what}", check.name())))
}

fn plemelj_ratio(values: &[Complex64], grid: &UniformGrid) -> Result<f64> {
    match operator_norm_check(&SampledField::new(*grid, values.to_vec())?) {
        Err(IstError::UndefinedRatio(_)) => Ok(0.0),
        other => other,
    }
}

/// Evaluate the selected invariants in order.
pub fn run_invariant_suite(inputs: &SuiteInputs<'_>, selection: &[Check], tol: &Tolerances) -> Result<DiagnosticsReport> {
    let mut report = DiagnosticsReport::new();
    for &check in selection {
        match check {
            Check::Determinant => {
                let s = need(inputs.scattering, check, "scattering data")?;
                report.push(DiagnosticItem::at_most(
                    "determinant_residual",
                    s.residuals.determinant,
                    tol.identity,
                    "a d + sigma b conj(b(-k)) = 1",
                ));
            }
            Check::Symmetry => {
                let s = need(inputs.scattering, check, "scattering data")?;
                report.push(DiagnosticItem::at_most(
                    "symmetry_a",
                    s.residuals.symmetry_a,
                    tol.identity,
                    "conj(a(-k)) = a(k) on real k",
                ));
                report.push(DiagnosticItem::at_most(
                    "symmetry_d",
                    s.residuals.symmetry_d,
                    tol.identity,
                    "conj(d(-k)) = d(k) on real k",
                ));
            }
            Check::Wronskian => {
                let s = need(inputs.scattering, check, "scattering data")?;
                report.push(DiagnosticItem::at_most(
                    "wronskian_vs_integral",
                    s.residuals.wronskian,
                    tol.wronskian,
                    "Wronskian and integral expressions of a, d coincide",
                ));
            }
            Check::Tail => {
                let s = need(inputs.scattering, check, "scattering data")?;
                let kmax = s.kgrid.max_abs();
                // C fitted at k_max/2 from the 1/k decay law; factor 2 absorbs oscillation.
                let c = 0.5 * kmax * s.residuals.tail_half;
                report.push(DiagnosticItem::at_most(
                    "tail_decay",
                    s.residuals.tail,
                    2.0 * c / kmax + 1e-10,
                    "a, d -> 1 and b -> 0 as |k| -> infinity",
                ));
            }
            Check::NoResonance => {
                let p = need(inputs.potential, check, "the potential")?;
                let s = need(inputs.scattering, check, "scattering data")?;
                report.extend(no_resonance_check(p, s));
            }
            Check::ReflectionBound => {
                let r = need(inputs.reflection, check, "reflection data")?;
                let small = inputs.potential.map(|p| p.small_norm()).or(r.small_norm);
                let anchor = "small norm implies sup |r1|, |r2| <= 1 - 1/(3 - e^{1/3}/2)";
                if small == Some(true) {
                    report.push(DiagnosticItem::at_most("sup_r", r.sup_r, reflection_bound(), anchor));
                } else {
                    report.push(DiagnosticItem::report("sup_r", r.sup_r, anchor));
                }
            }
            Check::Positivity => {
                let r = need(inputs.reflection, check, "reflection data")?;
                let mut sub = positivity_diagnostics(r).to_report();
                for item in &mut sub.items {
                    if item.name == "mu_product_residual" {
                        *item = DiagnosticItem::at_most(&item.name, item.value, tol.positivity, &item.anchor);
                    }
                }
                report.extend(sub);
            }
            Check::PlemeljNorm => {
                let r = need(inputs.reflection, check, "reflection data")?;
                let anchor = "||P+-||_{L2 -> L2} <= 1";
                report.push(DiagnosticItem::at_most(
                    "plemelj_norm_r1",
                    plemelj_ratio(&r.r1, &r.kgrid)?,
                    1.0 + tol.plemelj_norm,
                    anchor,
                ));
                report.push(DiagnosticItem::at_most(
                    "plemelj_norm_r2",
                    plemelj_ratio(&r.r2, &r.kgrid)?,
                    1.0 + tol.plemelj_norm,
                    anchor,
                ));
            }
        }
    }
    Ok(report)
}

/// Scatter `potential` and run the full suite.
pub fn full_suite(potential: &Potential, kgrid: &UniformGrid, tol: &Tolerances) -> Result<DiagnosticsReport> {
    let data = scattering_coefficients_with(potential, kgrid, tol.identity)?;
    let reflection = reflection_coefficients(&data)?;
    let inputs = SuiteInputs {
        potential: Some(potential),
        scattering: Some(&data),
        reflection: Some(&reflection),
    };
    run_invariant_suite(&inputs, &Check::ALL, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzOptions {
    pub kgrid: UniformGrid,
    pub rh: RhOptions,
}

impl LipschitzOptions {
    pub fn reference() -> Self {
        Self {
            kgrid: UniformGrid::symmetric(24.0, 1024).expect("reference k-grid"),
            rh: RhOptions::default(),
        }
    }
}

/// Measured Lipschitz ratios of the forward map q -> (r1, r2) and the inverse map back to q.
pub fn lipschitz_probe(q_a: &Potential, q_b: &Potential, opts: &LipschitzOptions) -> Result<DiagnosticsReport> {
    if !q_a.grid().same_as(q_b.grid()) {
        return Err(IstError::GridMismatch("Lipschitz probe needs both potentials on one grid".into()));
    }
    if q_a.sigma() != q_b.sigma() {
        return Err(IstError::Configuration("Lipschitz probe needs one sigma for both potentials".into()));
    }
    let xg = q_a.grid();
    let dq: Vec<Complex64> = q_a.values().iter().zip(q_b.values()).map(|(a, b)| a - b).collect();
    let dq_norm = weighted_norm_values(&dq, xg, NormKind::H11)?;
    if dq_norm == 0.0 {
        return Err(IstError::UndefinedRatio("identical potentials".into()));
    }
    let reflect = |q: &Potential| -> Result<ReflectionPair> {
        reflection_coefficients(&scattering_coefficients_with(q, &opts.kgrid, Tolerances::default().identity)?)
    };
    let (ra, rb) = (reflect(q_a)?, reflect(q_b)?);
    let diff = |u: &[Complex64], v: &[Complex64]| -> Vec<Complex64> { u.iter().zip(v).map(|(a, b)| a - b).collect() };
    let dr = weighted_norm_values(&diff(&ra.r1, &rb.r1), &opts.kgrid, NormKind::HScript)?
        + weighted_norm_values(&diff(&ra.r2, &rb.r2), &opts.kgrid, NormKind::HScript)?;
    if dr == 0.0 {
        return Err(IstError::UndefinedRatio("reflection data coincide".into()));
    }
    let qa_hat = reconstruct_q(&ra, xg, q_a.sigma(), &opts.rh)?;
    let qb_hat = reconstruct_q(&rb, xg, q_b.sigma(), &opts.rh)?;
    let dq_hat = weighted_norm_values(&diff(qa_hat.values(), qb_hat.values()), xg, NormKind::H11)?;

    let mut report = DiagnosticsReport::new();
    report.push(DiagnosticItem::report(
        "forward_ratio",
        dr / dq_norm,
        "q -> (r1, r2) is Lipschitz from H^{1,1} into H_script",
    ));
    report.push(DiagnosticItem::report(
        "inverse_ratio",
        dq_hat / dr,
        "(r1, r2) -> q is Lipschitz from H_script into H^{1,1}",
    ));
    report.push(DiagnosticItem::report("delta_q_h11", dq_norm, "plumbing"));
    report.push(DiagnosticItem::report("delta_r_h_script", dr, "plumbing"));
    for (label, q) in [("q_a", q_a), ("q_b", q_b)] {
        if !q.small_norm() {
            report.warn(format!("{label} has ||q||_1 = {:.6} >= 1/6", q.l1_norm()));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_is_conjunction() {
        let mut r = DiagnosticsReport::new();
        r.push(DiagnosticItem::at_most("a", 1e-9, 1e-6, "x"));
        r.push(DiagnosticItem::at_least("b", 0.9, 0.76, "y"));
        r.push(DiagnosticItem::report("c", 3.0, ""));
        assert!(r.overall);
        assert_eq!(r.get("c").unwrap().anchor, "plumbing");
        r.push(DiagnosticItem::at_most("d", 1.0, 0.5, "z"));
        assert!(!r.overall);
        assert_eq!(r.failures().count(), 1);
        let text = r.to_string();
        assert!(text.contains("FAIL") && text.ends_with("overall: fail"));
    }

    fn xg() -> UniformGrid {
        UniformGrid::symmetric(16.0, 512).unwrap()
    }

    fn kg() -> UniformGrid {
        UniformGrid::symmetric(24.0, 1024).unwrap()
    }

    #[test]
    fn tolerance_table_round_trips_by_name() {
        let mut t = Tolerances::default();
        for name in Tolerances::NAMES {
            assert!(t.get(name).is_some(), "{name}");
        }
        t.set("plemelj-norm", 1e-9).unwrap();
        assert_eq!(t.plemelj_norm, 1e-9);
        assert!(t.set("nope", 1.0).is_err());
        assert!(t.set("jump", -1.0).is_err());
        assert_eq!("no-resonance".parse::<Check>().unwrap(), Check::NoResonance);
    }

    #[test]
    fn zero_potential_full_suite_passes_with_zero_residuals() {
        let q = Potential::zero(xg(), crate::scattering::Sigma::Plus);
        let r = full_suite(&q, &kg(), &Tolerances::default()).unwrap();
        assert!(r.overall, "{r}");
        for name in ["determinant_residual", "symmetry_a", "symmetry_d", "tail_decay", "sup_r"] {
            assert_eq!(r.value(name), Some(0.0), "{name}");
        }
    }

    #[test]
    fn gaussian_suite_meets_the_small_norm_bounds() {
        for sigma in [crate::scattering::Sigma::Plus, crate::scattering::Sigma::Minus] {
            let q = Potential::gaussian(xg(), sigma, 0.08, 0.0).unwrap();
            let r = full_suite(&q, &kg(), &Tolerances::default()).unwrap();
            assert!(r.overall, "{r}");
            assert!(r.value("min_abs_a").unwrap() >= 0.76738);
            assert!(r.value("mu_minus_min").unwrap() > 0.0);
        }
    }

    #[test]
    fn large_gaussian_fails_only_the_norm_item() {
        let q = Potential::gaussian(xg(), crate::scattering::Sigma::Plus, 0.2, 0.0).unwrap();
        let r = full_suite(&q, &kg(), &Tolerances::default()).unwrap();
        let failed: Vec<&str> = r.failures().map(|i| i.name.as_str()).collect();
        assert_eq!(failed, vec!["l1_norm"], "{r}");
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn missing_prerequisites_are_configuration_errors() {
        let q = Potential::zero(xg(), crate::scattering::Sigma::Plus);
        let inputs = SuiteInputs {
            potential: Some(&q),
            ..Default::default()
        };
        for check in Check::ALL {
            assert!(matches!(
                run_invariant_suite(&inputs, &[check], &Tolerances::default()),
                Err(IstError::Configuration(_))
            ));
        }
        assert!(run_invariant_suite(&inputs, &[], &Tolerances::default()).unwrap().overall);
    }

    #[test]
    fn lipschitz_rejects_identical_inputs() {
        let q = Potential::gaussian(xg(), crate::scattering::Sigma::Plus, 0.08, 0.0).unwrap();
        assert!(matches!(
            lipschitz_probe(&q, &q, &LipschitzOptions::reference()),
            Err(IstError::UndefinedRatio(_))
        ));
    }

    #[test]
    fn reports_are_deterministic() {
        let q = Potential::gaussian(xg(), crate::scattering::Sigma::Minus, 0.08, 0.5).unwrap();
        let a = full_suite(&q, &kg(), &Tolerances::default()).unwrap();
        let b = full_suite(&q, &kg(), &Tolerances::default()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn nan_never_passes_a_bound() {
        assert!(!DiagnosticItem::at_most("n", f64::NAN, 1.0, "x").pass);
        assert!(!DiagnosticItem::at_least("n", f64::NAN, 1.0, "x").pass);
    }
}
