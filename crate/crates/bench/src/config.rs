//! Experiment configuration and the string forms used on the command line.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use sait_core::problems::RhsMode;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("cannot parse {what} from '{input}': {reason}")]
pub struct SpecError {
    pub what: &'static str,
    pub input: String,
    pub reason: String,
}

fn spec_err(what: &'static str, input: &str, reason: impl Into<String>) -> SpecError {
    SpecError {
        what,
        input: input.to_string(),
        reason: reason.into(),
    }
}

fn parse_num<T: FromStr>(what: &'static str, input: &str, field: &str) -> Result<T, SpecError> {
    field
        .parse()
        .map_err(|_| spec_err(what, input, format!("'{field}' is not a valid number")))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Laplacian(usize),
    Mtx(PathBuf),
}

impl FromStr for ProblemSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("laplacian", n)) => Ok(ProblemSpec::Laplacian(parse_num("problem", s, n)?)),
            Some(("mtx", path)) if !path.is_empty() => Ok(ProblemSpec::Mtx(PathBuf::from(path))),
            _ => Err(spec_err("problem", s, "expected laplacian:<n> or mtx:<path>")),
        }
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSpec::Laplacian(n) => write!(f, "laplacian:{n}"),
            ProblemSpec::Mtx(p) => write!(f, "mtx:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrecondSpec {
    None,
    Exact,
    SaitThr { tau: f64, m: usize },
    SaitPat { p: usize, m: usize },
    Jacobi { k: usize },
}

impl PrecondSpec {
    pub fn needs_ilu(&self) -> bool {
        !matches!(self, PrecondSpec::None)
    }
}

impl FromStr for PrecondSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["none"] => Ok(PrecondSpec::None),
            ["exact"] => Ok(PrecondSpec::Exact),
            ["sait-thr", tau, m] => Ok(PrecondSpec::SaitThr {
                tau: parse_num("preconditioner", s, tau)?,
                m: parse_num("preconditioner", s, m)?,
            }),
            ["sait-pat", p, m] => Ok(PrecondSpec::SaitPat {
                p: parse_num("preconditioner", s, p)?,
                m: parse_num("preconditioner", s, m)?,
            }),
            ["jacobi", k] => Ok(PrecondSpec::Jacobi {
                k: parse_num("preconditioner", s, k)?,
            }),
            _ => Err(spec_err(
                "preconditioner",
                s,
                "expected none, exact, sait-thr:<tau>:<m>, sait-pat:<p>:<m> or jacobi:<k>",
            )),
        }
    }
}

impl fmt::Display for PrecondSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecondSpec::None => f.write_str("none"),
            PrecondSpec::Exact => f.write_str("exact"),
            PrecondSpec::SaitThr { tau, m } => write!(f, "sait-thr:{tau}:{m}"),
            PrecondSpec::SaitPat { p, m } => write!(f, "sait-pat:{p}:{m}"),
            PrecondSpec::Jacobi { k } => write!(f, "jacobi:{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverSpec {
    Pcg,
    Lobpcg { nev: usize },
}

impl FromStr for SolverSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "pcg" => Ok(SolverSpec::Pcg),
            Some(("lobpcg", nev)) => Ok(SolverSpec::Lobpcg {
                nev: parse_num("solver", s, nev)?,
            }),
            _ => Err(spec_err("solver", s, "expected pcg or lobpcg:<nev>")),
        }
    }
}

impl fmt::Display for SolverSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverSpec::Pcg => f.write_str("pcg"),
            SolverSpec::Lobpcg { nev } => write!(f, "lobpcg:{nev}"),
        }
    }
}

/// One experiment: a problem, an ILU level, a preconditioner and a solver.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub ilu_level: usize,
    pub precond: PrecondSpec,
    pub solver: SolverSpec,
    pub tol: f64,
    pub maxit: usize,
    pub seed: u64,
    pub threads: usize,
    pub rhs: RhsMode,
}

impl ExperimentConfig {
    pub const DEFAULT_TOL: f64 = 1e-10;
    pub const DEFAULT_MAXIT: usize = 10_000;

    pub fn new(problem: ProblemSpec, precond: PrecondSpec, solver: SolverSpec) -> Self {
        Self {
            problem,
            ilu_level: 0,
            precond,
            solver,
            tol: Self::DEFAULT_TOL,
            maxit: Self::DEFAULT_MAXIT,
            seed: 0,
            threads: 1,
            rhs: RhsMode::OnesSolution,
        }
    }

    pub fn with_ilu(mut self, level: usize) -> Self {
        self.ilu_level = level;
        self
    }

    pub fn with_precond(mut self, precond: PrecondSpec) -> Self {
        self.precond = precond;
        self
    }
}

/// The parameter a sweep varies.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Tau(Vec<f64>),
    P(Vec<usize>),
    M(Vec<usize>),
    JacobiK(Vec<usize>),
}

impl SweepAxis {
    pub fn len(&self) -> usize {
        match self {
            SweepAxis::Tau(v) => v.len(),
            SweepAxis::P(v) | SweepAxis::M(v) | SweepAxis::JacobiK(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Configurations for every axis point, in axis order.
    pub fn expand(&self, base: &ExperimentConfig) -> Result<Vec<ExperimentConfig>, SpecError> {
        let mismatch = |axis: &str| {
            spec_err(
                "sweep",
                &base.precond.to_string(),
                format!("axis '{axis}' does not apply to this preconditioner"),
            )
        };
        let with = |p: PrecondSpec| base.clone().with_precond(p);
        match (self, base.precond) {
            (SweepAxis::Tau(v), PrecondSpec::SaitThr { m, .. }) => {
                Ok(v.iter().map(|&tau| with(PrecondSpec::SaitThr { tau, m })).collect())
            }
            (SweepAxis::P(v), PrecondSpec::SaitPat { m, .. }) => {
                Ok(v.iter().map(|&p| with(PrecondSpec::SaitPat { p, m })).collect())
            }
            (SweepAxis::M(v), PrecondSpec::SaitThr { tau, .. }) => {
                Ok(v.iter().map(|&m| with(PrecondSpec::SaitThr { tau, m })).collect())
            }
            (SweepAxis::M(v), PrecondSpec::SaitPat { p, .. }) => {
                Ok(v.iter().map(|&m| with(PrecondSpec::SaitPat { p, m })).collect())
            }
            (SweepAxis::JacobiK(v), PrecondSpec::Jacobi { .. }) => {
                Ok(v.iter().map(|&k| with(PrecondSpec::Jacobi { k })).collect())
            }
            (SweepAxis::Tau(_), _) => Err(mismatch("tau")),
            (SweepAxis::P(_), _) => Err(mismatch("p")),
            (SweepAxis::M(_), _) => Err(mismatch("m")),
            (SweepAxis::JacobiK(_), _) => Err(mismatch("jacobi-k")),
        }
    }
}

/// Integer lists accept `a,b,c` and inclusive ranges `a-b`, mixed.
fn parse_int_list(input: &str, body: &str) -> Result<Vec<usize>, SpecError> {
    let mut out = Vec::new();
    for item in body.split(',') {
        match item.split_once('-') {
            Some((lo, hi)) => {
                let lo: usize = parse_num("sweep", input, lo)?;
                let hi: usize = parse_num("sweep", input, hi)?;
                if lo > hi {
                    return Err(spec_err("sweep", input, format!("empty range {lo}-{hi}")));
                }
                out.extend(lo..=hi);
            }
            None => out.push(parse_num("sweep", input, item)?),
        }
    }
    Ok(out)
}

impl FromStr for SweepAxis {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, body) = s
            .split_once(':')
            .ok_or_else(|| spec_err("sweep", s, "expected <axis>:<values>"))?;
        if body.is_empty() {
            return Err(spec_err("sweep", s, "axis has no values"));
        }
        match name {
            "tau" => Ok(SweepAxis::Tau(
                body.split(',')
                    .map(|v| parse_num("sweep", s, v))
                    .collect::<Result<_, _>>()?,
            )),
            "p" => Ok(SweepAxis::P(parse_int_list(s, body)?)),
            "m" => Ok(SweepAxis::M(parse_int_list(s, body)?)),
            "jacobi-k" => Ok(SweepAxis::JacobiK(parse_int_list(s, body)?)),
            _ => Err(spec_err("sweep", s, "axis must be tau, p, m or jacobi-k")),
        }
    }
}
