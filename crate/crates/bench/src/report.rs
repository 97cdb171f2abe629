//! Report rows and their CSV/JSON encodings.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("nothing to report")]
    Empty,
    #[error("unknown report format '{0}' (expected csv or json)")]
    UnknownFormat(String),
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

/// Rounds to six significant digits.
pub fn sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// One run, flattened. Floats are rounded to six significant digits when the
/// row is built, so both encodings reproduce the row exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ReportRow {
    pub schema_version: u32,
    pub problem: String,
    pub n: usize,
    pub nnz_a: usize,
    pub ilu_level: usize,
    pub precond: String,
    pub solver: String,
    pub tol: f64,
    pub maxit: usize,
    pub seed: u64,
    pub threads: usize,
    pub nnz_l: Option<usize>,
    pub nnz_u: Option<usize>,
    pub nnz_ml: Option<usize>,
    pub nnz_mu: Option<usize>,
    pub ratio_l: Option<f64>,
    pub ratio_u: Option<f64>,
    /// `(nnz(M_L) + nnz(M_U)) / (nnz(L) + nnz(U))`.
    pub ratio: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub residual_final: Option<f64>,
    /// Ritz values separated by `;` (eigenvalue runs only).
    pub eigenvalues: String,
    pub setup_s: f64,
    pub precond_apply_s: f64,
    pub other_s: f64,
    pub total_s: f64,
    /// `stage: message` when the run failed.
    pub error: String,
}

impl ReportRow {
    /// Applies six-significant-digit rounding to every float field.
    pub fn rounded(mut self) -> Self {
        let opt = |v: Option<f64>| v.map(sig6);
        self.tol = sig6(self.tol);
        self.ratio_l = opt(self.ratio_l);
        self.ratio_u = opt(self.ratio_u);
        self.ratio = opt(self.ratio);
        self.residual_final = opt(self.residual_final);
        self.setup_s = sig6(self.setup_s);
        self.precond_apply_s = sig6(self.precond_apply_s);
        self.other_s = sig6(self.other_s);
        self.total_s = sig6(self.total_s);
        self
    }

    /// Copy with the wall-clock fields zeroed, for determinism comparisons.
    pub fn without_timings(&self) -> Self {
        Self {
            setup_s: 0.0,
            precond_apply_s: 0.0,
            other_s: 0.0,
            total_s: 0.0,
            ..self.clone()
        }
    }

    pub fn failed(&self) -> bool {
        !self.error.is_empty()
    }

    pub fn eigenvalue_list(&self) -> Vec<f64> {
        self.eigenvalues
            .split(';')
            .filter(|s| !s.is_empty())
            .filter_map(|s| s.parse().ok())
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct JsonReport {
    schema_version: u32,
    rows: Vec<ReportRow>,
}

pub fn write_report<W: Write>(rows: &[ReportRow], format: Format, out: W) -> Result<(), ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(
                &mut out,
                &JsonReport {
                    schema_version: SCHEMA_VERSION,
                    rows: rows.to_vec(),
                },
            )?;
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn write_report_file(rows: &[ReportRow], format: Format, path: &Path) -> Result<(), ReportError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_report(rows, format, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_report<R: Read>(input: R, format: Format) -> Result<Vec<ReportRow>, ReportError> {
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_reader(input);
            let rows = r.deserialize().collect::<Result<Vec<ReportRow>, _>>()?;
            if let Some(bad) = rows.iter().find(|r| r.schema_version != SCHEMA_VERSION) {
                return Err(ReportError::Schema(bad.schema_version));
            }
            Ok(rows)
        }
        Format::Json => {
            let report: JsonReport = serde_json::from_reader(input)?;
            if report.schema_version != SCHEMA_VERSION {
                return Err(ReportError::Schema(report.schema_version));
            }
            Ok(report.rows)
        }
    }
}
