//! Benchmark harness for approximate-inverse ILU preconditioners.
//!
//! A run builds a problem, factors it with ILU(k), builds a preconditioner,
//! runs PCG or LOBPCG and produces one [`ReportRow`]. Sweeps vary one
//! preconditioner parameter over a list of values.

pub mod config;
pub mod report;
pub mod run;

pub use config::{ExperimentConfig, PrecondSpec, ProblemSpec, SolverSpec, SweepAxis};
pub use report::{Format, ReportRow};
pub use run::{exit_code, run, sweep, RunError};
