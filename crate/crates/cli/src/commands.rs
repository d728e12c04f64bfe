//! One function per subcommand. Each reads its inputs, runs the stage, writes artifacts and
//! returns the diagnostics report it printed.

use std::collections::BTreeMap;

use nonlocal_ist::diagnostics::{full_suite, run_invariant_suite, Check, DiagnosticItem, DiagnosticsReport, SuiteInputs};
use nonlocal_ist::evolution::{check_sampling, evolution_report, evolve_reflection, ist_solve, min_nodes_for, IstOptions};
use nonlocal_ist::io::{csv_provenance, read_data, write_artifact, write_text, Artifact, Provenance};
use nonlocal_ist::numerics::{relative_l2, UniformGrid};
use nonlocal_ist::pde::{conserved_quantity, linf_distance, split_step_with, SplitStepOptions};
use nonlocal_ist::reconstruction::{reconstruct, roundtrip_report, RoundtripOptions};
use nonlocal_ist::rh::RhOptions;
use nonlocal_ist::scattering::{
    no_resonance_check, reflection_coefficients, scattering_coefficients_with, Potential, ReflectionPair,
    ScatteringData, JOST_NORM_THRESHOLD, SMALL_NORM_THRESHOLD,
};
use nonlocal_ist::{IstError, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Settings;

pub struct Context<'a> {
    pub command: &'a str,
    pub settings: &'a Settings,
}

impl Context<'_> {
    fn provenance(&self) -> Provenance {
        Provenance::new(self.command, self.settings.snapshot())
    }

    fn rh(&self) -> Result<RhOptions> {
        let tol = self.settings.tolerances()?;
        Ok(RhOptions {
            tol: tol.neumann,
            max_iter: self.settings.usize("max_iter")?,
            ..RhOptions::default()
        })
    }

    fn input(&self) -> Result<&str> {
        self.settings.require("input")
    }

    fn out(&self) -> Option<&str> {
        self.settings.raw("out")
    }

    fn write<T: Serialize>(&self, format: &str, data: &T, report: Option<&DiagnosticsReport>) -> Result<()> {
        self.write_with(format, data, report, BTreeMap::new())
    }

    fn write_with<T: Serialize>(
        &self,
        format: &str,
        data: &T,
        report: Option<&DiagnosticsReport>,
        metadata: BTreeMap<String, Value>,
    ) -> Result<()> {
        let Some(out) = self.out() else { return Ok(()) };
        let mut art = Artifact::new(format, self.provenance(), data);
        art.metadata = metadata;
        if let Some(r) = report {
            art = art.with_metadata("report", serde_json::to_value(r)?);
        }
        write_artifact(out, &art)
    }

    fn load_potential(&self) -> Result<Potential> {
        let q: Potential = read_data(self.input()?)?;
        if let Some(s) = self.settings.raw("sigma").filter(|_| self.settings.is_explicit("sigma")) {
            if self.settings.sigma()? != q.sigma() {
                return Err(IstError::Configuration(format!(
                    "--sigma {s} disagrees with the input potential (sigma = {})",
                    q.sigma()
                )));
            }
        }
        Ok(q)
    }

    fn load_reflection(&self) -> Result<ReflectionPair> {
        read_data(self.input()?)
    }
}

fn warn(msg: &str) {
    eprintln!("warning: {msg}");
}

pub fn generate(ctx: &Context) -> Result<DiagnosticsReport> {
    let s = ctx.settings;
    let kind = s.require("kind")?;
    let sigma = s.sigma()?;
    let mut grid = s.xgrid()?;
    let mut params = BTreeMap::new();
    let q = match kind {
        "zero" => Potential::zero(grid, sigma),
        "gaussian" | "shifted_gaussian" => {
            let amplitude = s.opt_f64("amplitude")?.unwrap_or(0.08);
            let default_center = if kind == "gaussian" { 0.0 } else { 0.5 };
            let center = s.opt_f64("center")?.unwrap_or(default_center);
            params.insert("amplitude", amplitude);
            params.insert("center", center);
            Potential::gaussian(grid, sigma, amplitude, center)?
        }
        "box" => {
            let amplitude = s.opt_f64("amplitude")?.unwrap_or(0.1);
            let (left, right) = (s.f64("left")?, s.f64("right")?);
            if !(left < right) {
                return Err(IstError::Configuration(format!("box needs left < right, got [{left}, {right}]")));
            }
            if !s.is_explicit("nx") {
                // one node per 1/16 on the default window puts integer jumps on nodes
                grid = UniformGrid::new(grid.lo(), grid.hi(), 513)?;
            }
            let on_node = |v: f64| (grid.node(grid.nearest(v)) - v).abs() <= 1e-9 * grid.spacing();
            if !(on_node(left) && on_node(right)) {
                warn("box jumps fall between nodes; the sampled L1 norm is only first-order accurate");
            }
            params.insert("amplitude", amplitude);
            params.insert("left", left);
            params.insert("right", right);
            Potential::boxcar(grid, sigma, amplitude, left, right)?
        }
        other => {
            return Err(IstError::Configuration(format!(
                "unknown kind {other:?}; expected zero, gaussian, shifted_gaussian or box"
            )))
        }
    };
    if q.l1_norm() >= JOST_NORM_THRESHOLD {
        return Err(IstError::Configuration(format!(
            "||q||_1 = {:.6} >= 1: Jost solutions are not guaranteed to exist",
            q.l1_norm()
        )));
    }
    let mut report = DiagnosticsReport::new();
    report.push(DiagnosticItem::report("l1_norm", q.l1_norm(), "plumbing"));
    report.push(DiagnosticItem::report("endpoint_magnitude", q.endpoint_magnitude(), "plumbing"));
    if q.l1_norm() >= SMALL_NORM_THRESHOLD {
        let msg = format!("||q||_1 = {:.6} >= 1/6: outside the small-norm regime", q.l1_norm());
        warn(&msg);
        report.warn(msg);
    }
    let mut meta = BTreeMap::new();
    meta.insert("kind".to_string(), Value::from(kind));
    meta.insert("params".to_string(), json!(params));
    ctx.write_with("potential", &q, Some(&report), meta)?;
    Ok(report)
}

fn scatter_potential(ctx: &Context, q: &Potential) -> Result<(ScatteringData, DiagnosticsReport)> {
    let tol = ctx.settings.tolerances()?;
    let data = scattering_coefficients_with(q, &ctx.settings.kgrid()?, tol.identity)?;
    let inputs = SuiteInputs {
        potential: Some(q),
        scattering: Some(&data),
        reflection: None,
    };
    let mut report = run_invariant_suite(
        &inputs,
        &[Check::Determinant, Check::Symmetry, Check::Wronskian, Check::Tail],
        &tol,
    )?;
    report.extend(no_resonance_check(q, &data));
    Ok((data, report))
}

pub fn scatter(ctx: &Context) -> Result<DiagnosticsReport> {
    let q = ctx.load_potential()?;
    let (data, report) = scatter_potential(ctx, &q)?;
    ctx.write("scattering", &data, Some(&report))?;
    Ok(report)
}

fn write_reflection(ctx: &Context, r: &ReflectionPair, report: &DiagnosticsReport) -> Result<()> {
    match ctx.out() {
        Some(out) if out.ends_with(".csv") => {
            let text = format!("{}{}", csv_provenance(&ctx.provenance()), r.to_csv());
            write_text(out, &text)
        }
        _ => ctx.write("reflection", r, Some(report)),
    }
}

pub fn reflect(ctx: &Context) -> Result<DiagnosticsReport> {
    let path = ctx.input()?;
    let (data, mut report) = match read_data::<ScatteringData>(path) {
        Ok(d) => (d, DiagnosticsReport::new()),
        Err(_) => {
            let q = ctx.load_potential()?;
            scatter_potential(ctx, &q)?
        }
    };
    let r = reflection_coefficients(&data)?;
    let inputs = SuiteInputs {
        potential: None,
        scattering: None,
        reflection: Some(&r),
    };
    report.extend(run_invariant_suite(
        &inputs,
        &[Check::ReflectionBound, Check::Positivity],
        &ctx.settings.tolerances()?,
    )?);
    write_reflection(ctx, &r, &report)?;
    Ok(report)
}

pub fn evolve(ctx: &Context) -> Result<DiagnosticsReport> {
    let r0 = ctx.load_reflection()?;
    let t = ctx.settings.f64("t")?;
    let rt = evolve_reflection(&r0, t)?;
    let report = evolution_report(&r0, &rt, 0.0)?;
    write_reflection(ctx, &rt, &report)?;
    Ok(report)
}

pub fn reconstruct_cmd(ctx: &Context) -> Result<DiagnosticsReport> {
    let r = ctx.load_reflection()?;
    let tol = ctx.settings.tolerances()?;
    let sigma = if ctx.settings.is_explicit("sigma") {
        ctx.settings.sigma()?
    } else {
        r.sigma
    };
    let xg = ctx.settings.xgrid()?;
    let rec = reconstruct(&r, &xg, sigma, &ctx.rh()?)?;
    let mut report = DiagnosticsReport::new();
    report.push(DiagnosticItem::at_most(
        "max_jump_residual",
        rec.max_jump_residual,
        tol.jump,
        "M+ - M- = M- S on the real line",
    ));
    report.push(DiagnosticItem::at_most(
        "formula_agreement",
        relative_l2(rec.mirror.values(), rec.primary.values(), xg.spacing()),
        2.0 * tol.roundtrip,
        "both reconstruction formulas recover the same q",
    ));
    report.push(DiagnosticItem::report("max_iterations", rec.max_iterations as f64, "plumbing"));
    if !r.realizable {
        report.warn("reflection data is non-realizable (not produced from a potential)");
    }
    ctx.write("potential", &rec.primary, Some(&report))?;
    Ok(report)
}

pub fn roundtrip(ctx: &Context) -> Result<DiagnosticsReport> {
    let q = ctx.load_potential()?;
    let tolerances = ctx.settings.tolerances()?;
    let opts = RoundtripOptions {
        kgrid: ctx.settings.kgrid()?,
        rh: ctx.rh()?,
        tolerances,
    };
    let out = roundtrip_report(&q, &opts)?;
    ctx.write("potential", &out.reconstruction.primary, Some(&out.report))?;
    Ok(out.report)
}

fn split_step_options(ctx: &Context) -> Result<SplitStepOptions> {
    Ok(SplitStepOptions {
        dealias: ctx.settings.bool("dealias")?,
        nonlinear: true,
    })
}

pub fn pde(ctx: &Context) -> Result<DiagnosticsReport> {
    let q0 = ctx.load_potential()?;
    let (t, dt) = (ctx.settings.f64("t")?, ctx.settings.f64("dt")?);
    let q = split_step_with(&q0, t, dt, &split_step_options(ctx)?)?;
    let drift = (conserved_quantity(&q)? - conserved_quantity(&q0)?).norm();
    let mut report = DiagnosticsReport::new();
    report.push(DiagnosticItem::at_most(
        "conserved_quantity_drift",
        drift,
        ctx.settings.tolerances()?.conservation,
        "Q = int q(x) conj(q(-x)) dx is conserved",
    ));
    ctx.write("potential", &q, Some(&report))?;
    Ok(report)
}

/// k-grid for an IST run to time `t`, refined automatically unless `nk` was set explicitly.
fn evolution_kgrid(ctx: &Context, t: f64) -> Result<UniformGrid> {
    let kg = ctx.settings.kgrid()?;
    if check_sampling(&kg, t).is_ok() || ctx.settings.is_explicit("nk") {
        check_sampling(&kg, t)?;
        return Ok(kg);
    }
    let n = min_nodes_for(kg.max_abs(), t);
    eprintln!("note: raising nk from {} to {n} to resolve the phase at t = {t}", kg.len());
    UniformGrid::new(kg.lo(), kg.hi(), n)
}

pub fn compare(ctx: &Context) -> Result<DiagnosticsReport> {
    let q0 = ctx.load_potential()?;
    let (t, dt) = (ctx.settings.f64("t")?, ctx.settings.f64("dt")?);
    let tol = ctx.settings.tolerances()?;
    let kg = evolution_kgrid(ctx, t)?;
    let opts = IstOptions {
        rh: ctx.rh()?,
        tolerances: tol,
    };
    let ist = ist_solve(&q0, t, &kg, q0.grid(), &opts)?;
    let pde = split_step_with(&q0, t, dt, &split_step_options(ctx)?)?;
    let gap = linf_distance(&ist.potential, &pde)?;
    let mut report = ist.report.clone();
    report.push(DiagnosticItem::at_most(
        "linf_ist_vs_split_step",
        gap,
        tol.compare,
        "IST solution map agrees with direct integration of the PDE",
    ));
    report.push(DiagnosticItem::report("nk_used", kg.len() as f64, "plumbing"));
    let data = json!({
        "t": t,
        "dt": dt,
        "linf_distance": gap,
        "ist": ist.potential,
        "split_step": pde,
    });
    ctx.write("comparison", &data, Some(&report))?;
    Ok(report)
}

pub fn invariants(ctx: &Context) -> Result<DiagnosticsReport> {
    let q = ctx.load_potential()?;
    let tol = ctx.settings.tolerances()?;
    let kg = ctx.settings.kgrid()?;
    let checks = ctx.settings.require("checks")?;
    let report = if checks == "all" {
        full_suite(&q, &kg, &tol)?
    } else {
        let selection = checks
            .split(',')
            .map(str::parse::<Check>)
            .collect::<Result<Vec<_>>>()?;
        let data = scattering_coefficients_with(&q, &kg, tol.identity)?;
        let r = reflection_coefficients(&data)?;
        let inputs = SuiteInputs {
            potential: Some(&q),
            scattering: Some(&data),
            reflection: Some(&r),
        };
        run_invariant_suite(&inputs, &selection, &tol)?
    };
    ctx.write("report", &report, None)?;
    Ok(report)
}
