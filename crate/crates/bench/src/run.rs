//! Experiment execution: problem, ILU, preconditioner, solver, report row.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use sait_core::krylov::{self, PrecondOp};
use sait_core::sait::{self, SaitPatParams, SaitThrParams};
use sait_core::{ilu, problems, CsrMatrix, IluFactors};
use thiserror::Error;

use crate::config::{ExperimentConfig, PrecondSpec, ProblemSpec, SolverSpec, SpecError, SweepAxis};
use crate::report::{ReportRow, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Problem,
    Ilu,
    Precond,
    Solver,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Problem => "problem",
            Stage::Ilu => "ilu",
            Stage::Precond => "precond",
            Stage::Solver => "solver",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{stage}: {message}")]
pub struct RunError {
    pub stage: Stage,
    pub message: String,
}

fn fail<E: fmt::Display>(stage: Stage) -> impl Fn(E) -> RunError {
    move |e| RunError {
        stage,
        message: e.to_string(),
    }
}

/// The problem matrix and, if the preconditioner needs them, its ILU factors.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub a: CsrMatrix,
    pub factors: Option<IluFactors>,
    pub setup_s: f64,
}

pub fn load_problem(spec: &ProblemSpec) -> Result<CsrMatrix, RunError> {
    match spec {
        ProblemSpec::Laplacian(n) => problems::laplacian_3d(*n).map_err(fail(Stage::Problem)),
        ProblemSpec::Mtx(path) => problems::mm_read(path).map_err(fail(Stage::Problem)),
    }
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared, RunError> {
    let start = Instant::now();
    let a = load_problem(&config.problem)?;
    let factors = if config.precond.needs_ilu() {
        Some(ilu::ilu_k(&a, config.ilu_level).map_err(fail(Stage::Ilu))?)
    } else {
        None
    };
    Ok(Prepared {
        a,
        factors,
        setup_s: start.elapsed().as_secs_f64(),
    })
}

pub fn build_precond(spec: PrecondSpec, factors: Option<&IluFactors>) -> Result<PrecondOp, RunError> {
    let need = || {
        factors.ok_or_else(|| RunError {
            stage: Stage::Precond,
            message: "preconditioner requires ILU factors".into(),
        })
    };
    let err = fail(Stage::Precond);
    Ok(match spec {
        PrecondSpec::None => PrecondOp::Identity,
        PrecondSpec::Exact => PrecondOp::exact_ilu(need()?.clone()),
        PrecondSpec::SaitThr { tau, m } => {
            let f = need()?;
            let params = SaitThrParams::new(tau, m).map_err(&err)?;
            let (ml, mu) = sait::sait_thr_pair(f, params).map_err(&err)?;
            PrecondOp::sait_pair(ml, mu, f)
        }
        PrecondSpec::SaitPat { p, m } => {
            let f = need()?;
            let params = SaitPatParams::new(p, m).map_err(&err)?;
            let (ml, mu) = sait::sait_pat_pair(f, params).map_err(&err)?;
            PrecondOp::sait_pair(ml, mu, f)
        }
        PrecondSpec::Jacobi { k } => PrecondOp::jacobi_sweeps(need()?, k).map_err(fail(Stage::Precond))?,
    })
}

fn base_row(config: &ExperimentConfig) -> ReportRow {
    ReportRow {
        schema_version: SCHEMA_VERSION,
        problem: config.problem.to_string(),
        ilu_level: config.ilu_level,
        precond: config.precond.to_string(),
        solver: config.solver.to_string(),
        tol: config.tol,
        maxit: config.maxit,
        seed: config.seed,
        threads: config.threads,
        ..Default::default()
    }
}

/// Runs one configuration against already prepared matrices.
pub fn run_prepared(config: &ExperimentConfig, prepared: &Prepared) -> Result<ReportRow, RunError> {
    let a = &prepared.a;
    let mut row = base_row(config);
    row.n = a.nrows();
    row.nnz_a = a.nnz();

    let setup = Instant::now();
    let precond = build_precond(config.precond, prepared.factors.as_ref())?;
    row.setup_s = prepared.setup_s + setup.elapsed().as_secs_f64();

    if let Some(f) = &prepared.factors {
        row.nnz_l = Some(f.l.nnz());
        row.nnz_u = Some(f.u.nnz());
    }
    if let (PrecondOp::SaitPair { ml, mu, .. }, Some(f)) = (&precond, &prepared.factors) {
        row.nnz_ml = Some(ml.nnz());
        row.nnz_mu = Some(mu.nnz());
        row.ratio_l = Some(ml.nnz() as f64 / f.l.nnz() as f64);
        row.ratio_u = Some(mu.nnz() as f64 / f.u.nnz() as f64);
    }
    row.ratio = precond.nnz_ratio();

    match config.solver {
        SolverSpec::Pcg => {
            let b = problems::make_rhs(a, config.rhs);
            let (_, stats) = krylov::pcg(a, &b, &precond, config.tol, config.maxit)
                .map_err(fail(Stage::Solver))?;
            row.iterations = stats.iterations;
            row.converged = stats.converged;
            row.residual_final = Some(stats.final_true_residual);
            row.precond_apply_s = stats.precond_apply_secs;
            row.other_s = stats.other_secs;
            row.total_s = stats.total_secs;
        }
        SolverSpec::Lobpcg { nev } => {
            let start = Instant::now();
            let res = krylov::lobpcg(a, &precond, nev, config.tol, config.maxit, config.seed)
                .map_err(fail(Stage::Solver))?;
            row.iterations = res.iterations;
            row.converged = res.converged;
            row.residual_final = res
                .residual_history
                .last()
                .map(|r| r.iter().copied().fold(0.0, f64::max));
            row.eigenvalues = res
                .eigenvalues
                .iter()
                .map(|v| format!("{v:.5e}"))
                .collect::<Vec<_>>()
                .join(";");
            row.total_s = start.elapsed().as_secs_f64();
            row.other_s = row.total_s;
        }
    }
    Ok(row.rounded())
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Runs one experiment end to end.
pub fn run(config: &ExperimentConfig) -> Result<ReportRow, RunError> {
    with_threads(config.threads, || {
        let prepared = prepare(config)?;
        run_prepared(config, &prepared)
    })
}

/// A row recording a failed run.
pub fn error_row(config: &ExperimentConfig, err: &RunError) -> ReportRow {
    ReportRow {
        error: err.to_string(),
        ..base_row(config)
    }
    .rounded()
}

/// Runs every point of `axis` on top of `base`. The problem and ILU factors
/// are built once; failures are recorded per row and the sweep continues.
pub fn sweep(base: &ExperimentConfig, axis: &SweepAxis, parallel: bool) -> Result<Vec<ReportRow>, SpecError> {
    if axis.is_empty() {
        return Err(SpecError {
            what: "sweep",
            input: String::new(),
            reason: "axis has no points".into(),
        });
    }
    let configs = axis.expand(base)?;
    Ok(with_threads(base.threads, || {
        let prepared = match prepare(base) {
            Ok(p) => p,
            Err(e) => return configs.iter().map(|c| error_row(c, &e)).collect(),
        };
        let one = |c: &ExperimentConfig| run_prepared(c, &prepared).unwrap_or_else(|e| error_row(c, &e));
        if parallel {
            configs.par_iter().map(one).collect()
        } else {
            configs.iter().map(one).collect()
        }
    }))
}

/// Process exit code for a set of rows: 1 if any run failed, 2 if any did not
/// converge, 0 otherwise.
pub fn exit_code(rows: &[ReportRow]) -> i32 {
    if rows.iter().any(ReportRow::failed) {
        1
    } else if rows.iter().any(|r| !r.converged) {
        2
    } else {
        0
    }
}
