//! Command-line entry points: `solve`, `verify` and `compare`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::{CaseConfig, ConfigError};
use crate::output::{max_deflection, to_json, write_fields_csv, write_json, SolveReport};
use crate::solver::{minimize, ModelKind, SolveResult, SolveStatus};
use crate::verify::{all_pass, run_suite, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "shell", version, about = "Nonlinear six-parameter shell solver and verification suites")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize the total energy of a case and write the result.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Result JSON (overrides `output.result`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-node fields CSV (overrides `output.fields`).
        #[arg(long)]
        fields: Option<PathBuf>,
        /// Seed of the initial perturbation (overrides `initial.seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a verification suite and write its report.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report JSON; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a case with drill-active and drill-free coefficients.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parse arguments, configure the thread pool and dispatch.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_CONFIG;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: thread pool already initialized: {e}");
        }
    }
    match cli.command {
        Command::Solve { config, out, fields, seed } => cmd_solve(&config, out.as_deref(), fields.as_deref(), seed),
        Command::Verify { suite, seed, out } => cmd_verify(suite, seed, out.as_deref()),
        Command::Compare { config, out } => cmd_compare(&config, out.as_deref()),
    }
}

fn base_dir(config: &Path) -> &Path {
    config.parent().unwrap_or(Path::new("."))
}

fn report_error(e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {e}");
    EXIT_CONFIG
}

fn solve_case(cfg: &CaseConfig, dir: &Path, kind: ModelKind) -> Result<(SolveResult, crate::config::Case, f64), ConfigError> {
    let case = cfg.build_with(dir, kind)?;
    let start = Instant::now();
    let result = minimize(&case.initial, &case.surface, &case.model, &case.loads, &case.bc, &case.options)?;
    Ok((result, case, start.elapsed().as_secs_f64()))
}

pub fn cmd_solve(config: &Path, out: Option<&Path>, fields: Option<&Path>, seed: Option<u64>) -> i32 {
    let mut cfg = match CaseConfig::load(config) {
        Ok(c) => c,
        Err(e) => return report_error(e),
    };
    if let Some(seed) = seed {
        match cfg.initial.as_mut() {
            Some(init) => init.seed = seed,
            None => eprintln!("note: --seed has no effect without an `initial` section"),
        }
    }
    let Some(out) = out.map(Path::to_path_buf).or_else(|| cfg.output.result.clone()) else {
        return report_error("no result path: pass --out or set output.result");
    };
    let fields = fields.map(Path::to_path_buf).or_else(|| cfg.output.fields.clone());
    let (result, case, wall_time) = match solve_case(&cfg, base_dir(config), cfg.solver.energy_model) {
        Ok(r) => r,
        Err(e) => return report_error(e),
    };
    let report = SolveReport::new(&cfg, &result, &case.surface, wall_time);
    if let Err(e) = write_json(&out, &report) {
        return report_error(format!("cannot write {}: {e}", out.display()));
    }
    if let Some(path) = fields {
        if let Err(e) = write_fields_csv(&path, &case.surface, &result) {
            return report_error(format!("cannot write {}: {e}", path.display()));
        }
    }
    eprintln!(
        "{:?} after {} iterations: I = {:.6e}, |g|/|g0| = {:.3e}",
        result.status, result.iterations, result.functional, report.relative_gradient_norm
    );
    if result.converged() {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

pub fn cmd_verify(suite: Suite, seed: u64, out: Option<&Path>) -> i32 {
    let checks = run_suite(suite, seed);
    let text = to_json(&checks);
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                return report_error(format!("cannot write {}: {e}", path.display()));
            }
        }
        None => print!("{text}"),
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    eprintln!("{suite}: {passed}/{} checks passed", checks.len());
    for c in checks.iter().filter(|c| !c.pass) {
        eprintln!("  FAIL {} {}: {:e} (tolerance {:e})", c.case, c.quantity, c.value, c.tolerance);
    }
    if all_pass(&checks) {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

/// One row of the comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub model: ModelKind,
    pub status: SolveStatus,
    pub iterations: usize,
    pub functional: f64,
    pub strain_energy: f64,
    pub max_deflection: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub config: CaseConfig,
    pub rows: Vec<CompareRow>,
    pub energy_difference: f64,
    pub deflection_difference: f64,
}

pub fn compare_table(rows: &[CompareRow]) -> String {
    let mut s = format!("{:<24} {:<20} {:>10} {:>24} {:>24} {:>24}\n", "model", "status", "iterations", "functional", "strain_energy", "max_deflection");
    for r in rows {
        s += &format!(
            "{:<24} {:<20} {:>10} {:>24.16e} {:>24.16e} {:>24.16e}\n",
            serde_json::to_value(r.model).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            format!("{:?}", r.status),
            r.iterations,
            r.functional,
            r.strain_energy,
            r.max_deflection
        );
    }
    s
}

pub fn run_compare(cfg: &CaseConfig, dir: &Path) -> Result<CompareReport, ConfigError> {
    let mut rows = Vec::new();
    for kind in [ModelKind::QuadraticDrillActive, ModelKind::QuadraticDrillFree] {
        let (result, case, _) = solve_case(cfg, dir, kind)?;
        rows.push(CompareRow {
            model: kind,
            status: result.status,
            iterations: result.iterations,
            functional: result.functional,
            strain_energy: result.strain_energy,
            max_deflection: max_deflection(&result.config, &case.surface),
        });
    }
    Ok(CompareReport {
        config: cfg.clone(),
        energy_difference: rows[0].functional - rows[1].functional,
        deflection_difference: rows[0].max_deflection - rows[1].max_deflection,
        rows,
    })
}

pub fn cmd_compare(config: &Path, out: Option<&Path>) -> i32 {
    let cfg = match CaseConfig::load(config) {
        Ok(c) => c,
        Err(e) => return report_error(e),
    };
    let report = match run_compare(&cfg, base_dir(config)) {
        Ok(r) => r,
        Err(e) => return report_error(e),
    };
    print!("{}", compare_table(&report.rows));
    println!("energy difference {:.16e}, deflection difference {:.16e}", report.energy_difference, report.deflection_difference);
    if let Some(path) = out {
        if let Err(e) = write_json(path, &report) {
            return report_error(format!("cannot write {}: {e}", path.display()));
        }
    }
    if report.rows.iter().all(|r| r.status == SolveStatus::Converged) {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}
