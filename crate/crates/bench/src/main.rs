use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sait_bench::report::{write_report, write_report_file};
use sait_bench::run::error_row;
use sait_bench::{exit_code, run, sweep, ExperimentConfig, Format, PrecondSpec, ProblemSpec, SolverSpec, SweepAxis};
use sait_core::problems::RhsMode;

/// Run ILU-preconditioned PCG/LOBPCG experiments and emit a CSV or JSON report.
///
/// Exit status: 0 when every run converged, 2 when some run did not converge,
/// 1 on error.
#[derive(Parser, Debug)]
#[command(name = "sait-bench", version)]
struct Cli {
    /// laplacian:<n> or mtx:<path>
    #[arg(long)]
    problem: ProblemSpec,
    /// ILU fill level
    #[arg(long, default_value_t = 0)]
    ilu: usize,
    /// none | exact | sait-thr:<tau>:<m> | sait-pat:<p>:<m> | jacobi:<k>
    #[arg(long, default_value = "exact")]
    precond: PrecondSpec,
    /// pcg | lobpcg:<nev>
    #[arg(long, default_value = "pcg")]
    solver: SolverSpec,
    /// Relative residual for PCG, absolute eigen-residual for LOBPCG
    #[arg(long, default_value_t = ExperimentConfig::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = ExperimentConfig::DEFAULT_MAXIT)]
    maxit: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Right-hand side: ones (b = A*1) or random (unit norm from --seed)
    #[arg(long, default_value = "ones")]
    rhs: String,
    /// Vary one parameter: tau:<list> | p:<list> | m:<list> | jacobi-k:<list>
    /// where integer lists accept ranges, e.g. m:1-15
    #[arg(long)]
    sweep: Option<SweepAxis>,
    /// Run sweep points concurrently
    #[arg(long)]
    parallel_runs: bool,
    /// Output file (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
}

fn main() -> ExitCode {
    // clap's own exit status for usage errors (2) would read as non-convergence
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let rhs = match cli.rhs.as_str() {
        "ones" => RhsMode::OnesSolution,
        "random" => RhsMode::SeededRandom(cli.seed),
        other => {
            eprintln!("error: unknown --rhs '{other}' (expected ones or random)");
            return ExitCode::from(1);
        }
    };
    let config = ExperimentConfig {
        problem: cli.problem,
        ilu_level: cli.ilu,
        precond: cli.precond,
        solver: cli.solver,
        tol: cli.tol,
        maxit: cli.maxit,
        seed: cli.seed,
        threads: cli.threads,
        rhs,
    };

    let rows = match &cli.sweep {
        Some(axis) => match sweep(&config, axis, cli.parallel_runs) {
            Ok(rows) => rows,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        },
        None => vec![run(&config).unwrap_or_else(|e| {
            eprintln!("error: {e}");
            error_row(&config, &e)
        })],
    };

    let written = match &cli.out {
        Some(path) => write_report_file(&rows, cli.format, path),
        None => write_report(&rows, cli.format, io::stdout().lock()),
    };
    if let Err(e) = written {
        eprintln!("error: writing report: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(exit_code(&rows) as u8)
}
