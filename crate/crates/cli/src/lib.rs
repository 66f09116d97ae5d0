//! Command-line driver: `solve`, `sweep-a`, `validate`, `sobolev` and `check`.
//!
//! Exit codes: 0 on success, 1 on a failed gate, a non-converged solve or a
//! runtime error, 2 on a configuration or usage error.

pub mod config;
pub mod output;
pub mod validate;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use sbp_core::{
    invariant_suite, make_grid, solve_ground_state, sobolev_constant_report, sweep_a, Problem, RadialField, RadialGrid,
};

use crate::config::{ConfigError, Format, RunConfig};
use crate::output::{Outputs, SolveDocument, SolveDiagnostics};

#[derive(Debug, Parser)]
#[command(name = "sbp", version, about = "Radial ground states of the Schrödinger-Bopp-Podolsky equation")]
struct Cli {
    /// Config file, or `default` for the packaged configuration.
    #[arg(long, global = true, default_value = "default")]
    config: PathBuf,
    /// Output directory (overrides output.directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output formats (overrides output.formats).
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// RNG seed (overrides solver.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the ground state and its diagnostics.
    Solve,
    /// Continue the ground state in a towards the Coulomb limit.
    #[command(name = "sweep-a")]
    SweepA,
    /// Run the oracle gates.
    Validate,
    /// Sobolev-extremal quadrature report.
    Sobolev,
    /// Diagnostics for a stored field table (columns r,u,phi).
    Check {
        /// Field CSV as written by `solve` (field.csv).
        #[arg(long)]
        field: PathBuf,
    },
}

const EXIT_OK: i32 = 0;
const EXIT_FAIL: i32 = 1;
const EXIT_CONFIG: i32 = 2;

/// Runs the CLI with stdout and stderr.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_cli_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return EXIT_CONFIG;
        }
    };
    match dispatch(&cli, &cfg, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAIL
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(dir) = &cli.out {
        cfg.output.directory = dir.clone();
    }
    if let Some(f) = cli.format {
        cfg.output.formats = match f {
            FormatArg::Csv => vec![Format::Csv],
            FormatArg::Json => vec![Format::Json],
            FormatArg::Both => vec![Format::Csv, Format::Json],
        };
    }
    if let Some(seed) = cli.seed {
        cfg.solver.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn dispatch(cli: &Cli, cfg: &RunConfig, out: &mut dyn Write) -> AnyResult<i32> {
    let outputs = Outputs::new(&cfg.output)?;
    match &cli.command {
        Command::Solve => solve(cfg, &outputs, out),
        Command::SweepA => sweep(cfg, &outputs, out),
        Command::Validate => validate_cmd(cfg, &outputs, out),
        Command::Sobolev => sobolev(cfg, &outputs, out),
        Command::Check { field } => check(cfg, field, &outputs, out),
    }
}

fn solve(cfg: &RunConfig, outputs: &Outputs, out: &mut dyn Write) -> AnyResult<i32> {
    let params = cfg.params();
    let spec = cfg.grid_spec();
    let grid = spec.build()?;
    let problem = Problem::new(params, &grid)?;
    let opts = cfg.solve_options();
    let res = solve_ground_state(&problem, &opts, None)?;
    let sob = if params.is_critical() {
        let s = &cfg.sobolev;
        Some(sobolev_constant_report(&make_grid(s.n, s.r_max, s.grading)?)?)
    } else {
        None
    };
    let report = invariant_suite(&problem, &res.u, 1000, opts.seed, sob.as_ref())?;
    let doc = SolveDocument {
        params,
        grid: spec,
        energy: res.report,
        converged: res.converged,
        iterations: res.iterations,
        c_estimate: res.c_estimate,
        decay_slope: res.decay_slope,
        diagnostics: SolveDiagnostics {
            grad_rel: res.grad_rel,
            ground_state_guarantee: res.ground_state_guarantee,
            critical: res.critical,
            sobolev_grad_sq: sob.map(|s| s.grad_sq),
            report,
        },
    };
    outputs.write_solve(&doc, &res.u, &res.phi)?;
    writeln!(
        out,
        "solve: converged={} iterations={} J={:.12e} grad_rel={:.3e}",
        res.converged, res.iterations, res.report.j, res.grad_rel
    )?;
    if !res.ground_state_guarantee {
        writeln!(out, "note: p < 4, the result carries no ground-state guarantee")?;
    }
    Ok(if res.converged { EXIT_OK } else { EXIT_FAIL })
}

fn sweep(cfg: &RunConfig, outputs: &Outputs, out: &mut dyn Write) -> AnyResult<i32> {
    let grid = cfg.grid_spec().build()?;
    let rep = sweep_a(&cfg.params(), &cfg.sweep.a_list, &grid, &cfg.solve_options())?;
    outputs.write_sweep(&rep)?;
    writeln!(out, "sweep-a: reference J={:.12e} converged={}", rep.reference_j, rep.reference_converged)?;
    for r in &rep.rows {
        writeln!(
            out,
            "  a={:<8} J={:.10e} du={:.4e} dphi={:.4e} a|lap phi|={:.4e}{}{}",
            r.a,
            r.j,
            r.u_diff_h1,
            r.phi_grad_diff,
            r.a_lap_phi,
            if r.converged { "" } else { " NOT-CONVERGED" },
            if r.non_monotone { " NON-MONOTONE" } else { "" },
        )?;
    }
    let all_converged = rep.reference_converged && rep.rows.iter().all(|r| r.converged);
    Ok(if all_converged { EXIT_OK } else { EXIT_FAIL })
}

fn validate_cmd(cfg: &RunConfig, outputs: &Outputs, out: &mut dyn Write) -> AnyResult<i32> {
    let gates = validate::all_gates(cfg.solver.seed)?;
    outputs.write_gates(&gates)?;
    for g in &gates {
        writeln!(
            out,
            "{:<20} {} worst={:.3e} tol={:.1e}",
            g.name,
            if g.pass { "PASS" } else { "FAIL" },
            g.worst,
            g.tolerance
        )?;
    }
    Ok(if gates.iter().all(|g| g.pass) { EXIT_OK } else { EXIT_FAIL })
}

fn sobolev(cfg: &RunConfig, outputs: &Outputs, out: &mut dyn Write) -> AnyResult<i32> {
    let s = &cfg.sobolev;
    let rep = sobolev_constant_report(&make_grid(s.n, s.r_max, s.grading)?)?;
    outputs.write_sobolev(&rep)?;
    writeln!(
        out,
        "sobolev: grad_sq={:.12e} l6_pow6={:.12e} mismatch={:.3e}{}",
        rep.grad_sq,
        rep.l6_pow6,
        rep.mismatch,
        if rep.truncation_warning { " (warning: r_max too small)" } else { "" }
    )?;
    Ok(EXIT_OK)
}

fn check(cfg: &RunConfig, field: &Path, outputs: &Outputs, out: &mut dyn Write) -> AnyResult<i32> {
    let (grid, u) = output::read_field(field)?;
    let problem = Problem::new(cfg.params(), &grid)?;
    let report = invariant_suite(&problem, &u, 1000, cfg.solver.seed, None)?;
    outputs.write_diagnostics(&report)?;
    for (k, v) in report.flat() {
        writeln!(out, "{k},{v}")?;
    }
    Ok(EXIT_OK)
}

/// Exposed for tests that build fields by hand.
pub fn field_from_columns(r: Vec<f64>, u: Vec<f64>) -> sbp_core::Result<(std::sync::Arc<RadialGrid>, RadialField)> {
    let grid = RadialGrid::from_nodes(r)?;
    let field = RadialField::new(&grid, u)?;
    Ok((grid, field))
}
