//! Command-line front end: single evaluations, verification suites and sweeps.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid input, 3 an evaluation
//! did not converge (its record is still printed with `converged = false`).

pub mod compute;
pub mod config;
pub mod error;
pub mod output;
pub mod sweep;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand};

use crate::compute::{ErrfnKind, ErrfnPath};
use crate::config::{
    make_tolerance, max_evals_cap, output_format, ComplexArg, JobArgs, OutputFormat, TolSpec, DEFAULT_R_MAX, DEFAULT_SEED,
};
use crate::error::{CliError, CliResult, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE, EXIT_VERIFY_FAILED};
use crate::output::{write_records, Record};
use crate::sweep::{build_grid, run_sweep, SweepParam};
use crate::verify::{run_suite, Suite};

#[derive(Debug, Parser)]
#[command(name = "mordell", version, about = "Higher Mordell integrals of binary quadratic forms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a single quantity.
    Eval {
        #[command(subcommand)]
        target: EvalTarget,
    },
    /// Run a verification suite and print a JSON report.
    Verify(VerifyArgs),
    /// Evaluate H over a grid of one parameter.
    Sweep(SweepArgs),
}

#[derive(Debug, Subcommand)]
pub enum EvalTarget {
    /// H_alpha(iv) by a lattice sum or the kernel integral.
    #[command(name = "H", alias = "h")]
    H(JobArgs),
    /// E, M, E2 or M2.
    Errfn(ErrfnArgs),
    /// The Mordell integral h(z; tau).
    Mordell(MordellArgs),
    /// The double Eichler integral over a lattice box.
    DoubleEichler(JobArgs),
}

#[derive(Debug, Args)]
pub struct ErrfnArgs {
    #[arg(long, value_enum)]
    pub kind: ErrfnKind,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub kappa: f64,
    /// `u` or `u1,u2`.
    #[arg(long, allow_hyphen_values = true)]
    pub u: String,
    #[arg(long, value_enum, default_value = "relation")]
    pub path: ErrfnPath,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub out: Option<OutputFormat>,
}

#[derive(Debug, Args)]
pub struct MordellArgs {
    /// `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub z: ComplexArg,
    /// `re,im` with im > 0.
    #[arg(long, allow_hyphen_values = true)]
    pub tau: ComplexArg,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub out: Option<OutputFormat>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    /// Multiplies every check tolerance.
    #[arg(long = "tol-scale", default_value_t = 1.0)]
    pub tol_scale: f64,
    /// Seed for the randomly drawn test points.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub job: JobArgs,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Explicit comma-separated grid (rationals for alpha1).
    #[arg(long, allow_hyphen_values = true)]
    pub values: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
}

fn emit(records: &[Record], format: OutputFormat, out: &mut dyn Write) -> CliResult<u8> {
    write_records(records, format, out)?;
    Ok(if records.iter().all(|r| r.converged) {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn parse_u(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("expected numbers in --u, got '{s}'")))
        })
        .collect()
}

fn execute(cli: Cli, out: &mut dyn Write) -> CliResult<u8> {
    match cli.command {
        Command::Eval { target } => match target {
            EvalTarget::H(args) => {
                let job = args.resolve()?;
                emit(&[compute::eval_h(&job)?], job.output, out)
            }
            EvalTarget::Errfn(a) => {
                let tol = make_tolerance(a.tol.map(TolSpec::Scalar))?;
                let rec = compute::eval_errfn(a.kind, a.path, a.kappa, &parse_u(&a.u)?, &tol)?;
                emit(&[rec], a.out.unwrap_or(OutputFormat::Csv), out)
            }
            EvalTarget::Mordell(a) => {
                let tol = make_tolerance(a.tol.map(TolSpec::Scalar))?;
                let rec = compute::eval_mordell(a.z.0, a.tau.0, &tol)?;
                emit(&[rec], a.out.unwrap_or(OutputFormat::Csv), out)
            }
            EvalTarget::DoubleEichler(args) => {
                let file = args.file()?;
                let form = args.form.or(file.form).ok_or_else(|| CliError::Usage("missing --form".into()))?;
                let alpha = args.alpha.or(file.alpha).ok_or_else(|| CliError::Usage("missing --alpha".into()))?;
                let tau = args.tau(&file, None)?;
                let tol = make_tolerance(args.tol.map(TolSpec::Scalar).or(file.tol))?;
                let r_max = args.r_max.or(file.r_max).unwrap_or(DEFAULT_R_MAX);
                let rec = compute::eval_double_eichler(&form, &alpha, tau, &tol, r_max)?;
                emit(&[rec], output_format(args.out, &file), out)
            }
        },
        Command::Verify(a) => {
            if !(a.tol_scale > 0.0 && a.tol_scale.is_finite()) {
                return Err(CliError::Usage(format!("--tol-scale must be positive, got {}", a.tol_scale)));
            }
            let report = run_suite(a.suite, a.tol_scale, a.seed.unwrap_or(DEFAULT_SEED), max_evals_cap()?);
            serde_json::to_writer_pretty(&mut *out, &report)?;
            writeln!(out).map_err(|e| CliError::Output(e.to_string()))?;
            Ok(if !report.converged {
                EXIT_NOT_CONVERGED
            } else if report.pass {
                EXIT_OK
            } else {
                EXIT_VERIFY_FAILED
            })
        }
        Command::Sweep(a) => {
            let grid = build_grid(a.param, a.values.as_deref(), a.from.as_deref(), a.to.as_deref(), a.steps)?;
            let job = a.job.resolve_with_v(grid.first_v())?;
            let records = run_sweep(&job, &grid)?;
            emit(&records, job.output, out)
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
