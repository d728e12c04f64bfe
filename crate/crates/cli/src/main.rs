//! `nonlocal-ist`: command-line driver for the scattering, evolution and reconstruction pipeline.
//!
//! Exit status: 0 on success, 1 on numerical failure (or a failed check under `--strict`),
//! 2 on usage or configuration errors.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nonlocal_ist::{IstError, Result};

use crate::commands::Context;
use crate::config::Settings;

#[derive(Parser)]
#[command(name = "nonlocal-ist", version, about = "Inverse scattering toolkit for the nonlocal NLS equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a sampled potential (zero, gaussian, shifted_gaussian, box).
    Generate {
        #[arg(long)]
        kind: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        amplitude: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        center: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        left: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        right: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Scattering coefficients a, b, c, d of a potential.
    Scatter(Common),
    /// Reflection coefficients from a potential or a scattering file (`.csv` output for CSV).
    Reflect(Common),
    /// Evolve reflection data by `--t`.
    Evolve(Common),
    /// Reconstruct the potential from reflection data on the x-grid.
    Reconstruct(Common),
    /// Scatter, reflect and reconstruct; report the roundtrip error.
    Roundtrip(Common),
    /// Split-step integration of the PDE to `--t` with step `--dt`.
    Pde(Common),
    /// IST solution versus split-step solution at `--t`.
    Compare(Common),
    /// Run invariant checks (`--checks all` or a comma list).
    Invariants {
        #[arg(long)]
        checks: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Default)]
struct Common {
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    kmin: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    kmax: Option<f64>,
    #[arg(long)]
    nk: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    xmin: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    xmax: Option<f64>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<i32>,
    /// Turn failed checks into exit status 1.
    #[arg(long)]
    strict: bool,
    /// Worker threads for the parallel stages (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// 2/3-rule truncation in the split-step integrator.
    #[arg(long)]
    dealias: bool,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol_identity: Option<f64>,
    #[arg(long)]
    tol_wronskian: Option<f64>,
    #[arg(long)]
    tol_jump: Option<f64>,
    #[arg(long)]
    tol_neumann: Option<f64>,
    #[arg(long)]
    tol_roundtrip: Option<f64>,
    #[arg(long)]
    tol_compare: Option<f64>,
    #[arg(long)]
    tol_conservation: Option<f64>,
    #[arg(long)]
    tol_plemelj_norm: Option<f64>,
    #[arg(long)]
    tol_positivity: Option<f64>,
    #[arg(long)]
    tol_lipschitz: Option<f64>,
}

impl Common {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut put = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        put("input", self.input.clone());
        put("out", self.out.clone());
        put("kmin", self.kmin.map(|v| v.to_string()));
        put("kmax", self.kmax.map(|v| v.to_string()));
        put("nk", self.nk.map(|v| v.to_string()));
        put("xmin", self.xmin.map(|v| v.to_string()));
        put("xmax", self.xmax.map(|v| v.to_string()));
        put("nx", self.nx.map(|v| v.to_string()));
        put("t", self.t.map(|v| v.to_string()));
        put("dt", self.dt.map(|v| v.to_string()));
        put("sigma", self.sigma.map(|v| v.to_string()));
        put("strict", self.strict.then(|| "true".to_string()));
        put("workers", self.workers.map(|v| v.to_string()));
        put("dealias", self.dealias.then(|| "true".to_string()));
        put("max_iter", self.max_iter.map(|v| v.to_string()));
        put("tol_identity", self.tol_identity.map(|v| v.to_string()));
        put("tol_wronskian", self.tol_wronskian.map(|v| v.to_string()));
        put("tol_jump", self.tol_jump.map(|v| v.to_string()));
        put("tol_neumann", self.tol_neumann.map(|v| v.to_string()));
        put("tol_roundtrip", self.tol_roundtrip.map(|v| v.to_string()));
        put("tol_compare", self.tol_compare.map(|v| v.to_string()));
        put("tol_conservation", self.tol_conservation.map(|v| v.to_string()));
        put("tol_plemelj_norm", self.tol_plemelj_norm.map(|v| v.to_string()));
        put("tol_positivity", self.tol_positivity.map(|v| v.to_string()));
        put("tol_lipschitz", self.tol_lipschitz.map(|v| v.to_string()));
        out
    }
}

fn resolve(common: &Common, extra: Vec<(&'static str, String)>) -> Result<Settings> {
    let mut settings = Settings::defaults();
    if let Some(path) = &common.config {
        settings.load_file(path)?;
    }
    for (k, v) in common.pairs().into_iter().chain(extra) {
        settings.set(k, v)?;
    }
    Ok(settings)
}

fn opt<T: ToString>(key: &'static str, v: &Option<T>) -> Option<(&'static str, String)> {
    v.as_ref().map(|v| (key, v.to_string()))
}

fn run(cli: Cli) -> Result<bool> {
    let (name, common, extra) = match &cli.command {
        Command::Generate {
            kind,
            amplitude,
            center,
            left,
            right,
            common,
        } => (
            "generate",
            common,
            [
                opt("kind", kind),
                opt("amplitude", amplitude),
                opt("center", center),
                opt("left", left),
                opt("right", right),
            ]
            .into_iter()
            .flatten()
            .collect(),
        ),
        Command::Scatter(c) => ("scatter", c, vec![]),
        Command::Reflect(c) => ("reflect", c, vec![]),
        Command::Evolve(c) => ("evolve", c, vec![]),
        Command::Reconstruct(c) => ("reconstruct", c, vec![]),
        Command::Roundtrip(c) => ("roundtrip", c, vec![]),
        Command::Pde(c) => ("pde", c, vec![]),
        Command::Compare(c) => ("compare", c, vec![]),
        Command::Invariants { checks, common } => ("invariants", common, opt("checks", checks).into_iter().collect()),
    };
    let settings = resolve(common, extra)?;
    let workers = settings.usize("workers")?;
    if workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| IstError::Configuration(format!("cannot start {workers} workers: {e}")))?;
    }
    let ctx = Context {
        command: name,
        settings: &settings,
    };
    let report = match name {
        "generate" => commands::generate(&ctx)?,
        "scatter" => commands::scatter(&ctx)?,
        "reflect" => commands::reflect(&ctx)?,
        "evolve" => commands::evolve(&ctx)?,
        "reconstruct" => commands::reconstruct_cmd(&ctx)?,
        "roundtrip" => commands::roundtrip(&ctx)?,
        "pde" => commands::pde(&ctx)?,
        "compare" => commands::compare(&ctx)?,
        _ => commands::invariants(&ctx)?,
    };
    // a closed pipe (e.g. `| head`) is not an error of the computation
    let _ = writeln!(std::io::stdout(), "{report}");
    Ok(report.overall || !settings.bool("strict")?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: a check failed in strict mode");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 1 } else { 2 })
        }
    }
}
