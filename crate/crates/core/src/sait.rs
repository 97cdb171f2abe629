//! Sparse approximate inverses of triangular matrices from the Jacobi series.
//!
//! For a triangular `T` with diagonal `D`, the Jacobi iteration matrix
//! `tT = I - D^{-1} T` is strictly triangular and therefore nilpotent, so
//!
//! ```text
//! T^{-1} = (I + tT + tT^2 + ... + tT^{n-1}) D^{-1}
//! ```
//!
//! is a finite series. The approximate inverse evaluates a truncation of it by
//! Horner's rule, `M <- tT M + I` starting from `M = I`, applies a dropping
//! rule after every step and finally scales by `D^{-1}`. After `m` steps
//! without dropping, `M D = sum_{i=0}^{m} tT^i`.
//!
//! Two dropping rules are provided: magnitude thresholding ([`sait_thr`]) and
//! masking to the pattern reached after `p` undropped steps ([`sait_pat`]).
//! Thresholding is applied to the unit-diagonal iterate, before the `D^{-1}`
//! scaling, and never removes a diagonal entry.

use thiserror::Error;

use crate::ilu::IluFactors;
use crate::sparse::{
    self, CsrMatrix, SparseError, SparsityPattern, Triangle, TriangularKind,
};

/// Relative change below which a recursion step counts as stationary.
pub const STATIONARY_TOL: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SaitError {
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, SaitError>;

/// Parameters of threshold-based construction: drop tolerance and step count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaitThrParams {
    tau: f64,
    m: usize,
}

impl SaitThrParams {
    pub fn new(tau: f64, m: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&tau) {
            return Err(SaitError::InvalidParams(format!(
                "threshold tau must lie in [0, 1), got {tau}"
            )));
        }
        if m == 0 {
            return Err(SaitError::InvalidParams("step count m must be at least 1".into()));
        }
        Ok(Self { tau, m })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

/// Parameters of pattern-based construction: `p` pattern-growth steps
/// followed by `m` masked refinement steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SaitPatParams {
    p: usize,
    m: usize,
}

impl SaitPatParams {
    pub fn new(p: usize, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(SaitError::InvalidParams("step count m must be at least 1".into()));
        }
        Ok(Self { p, m })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

/// `T = D (I - tT)`: the inverse diagonal and the strictly triangular
/// Jacobi iteration matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiSplit {
    pub inv_diag: Vec<f64>,
    pub tt: CsrMatrix,
    pub kind: TriangularKind,
}

/// Splits a triangular matrix into `D^{-1}` and `tT = I - D^{-1} T`.
pub fn jacobi_split(t: &CsrMatrix, kind: TriangularKind) -> std::result::Result<JacobiSplit, SparseError> {
    if !t.is_square() {
        return Err(SparseError::NotSquare {
            op: "jacobi_split",
            nrows: t.nrows(),
            ncols: t.ncols(),
        });
    }
    let n = t.nrows();
    let mut inv_diag = Vec::with_capacity(n);
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(t.nnz().saturating_sub(n));
    let mut values = Vec::with_capacity(t.nnz().saturating_sub(n));
    row_ptr.push(0);
    for i in 0..n {
        let (cols, vals) = t.row(i);
        let d = match cols.binary_search(&i) {
            Ok(k) if vals[k] != 0.0 => vals[k],
            _ => return Err(SparseError::ZeroDiagonal { row: i }),
        };
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i {
                continue;
            }
            if !kind.admits(i, j) {
                return Err(SparseError::NotTriangular {
                    row: i,
                    col: j,
                    kind: kind.triangle,
                });
            }
            col_idx.push(j);
            values.push(-v / d);
        }
        row_ptr.push(col_idx.len());
        inv_diag.push(1.0 / d);
    }
    let tt = CsrMatrix::try_from_csr(n, n, row_ptr, col_idx, values)?;
    Ok(JacobiSplit { inv_diag, tt, kind })
}

impl JacobiSplit {
    pub fn n(&self) -> usize {
        self.inv_diag.len()
    }

    /// `k` Jacobi sweeps for `T x = b` from `x = 0`:
    /// `x <- tT x + D^{-1} b`.
    pub fn sweeps(&self, b: &[f64], k: usize) -> std::result::Result<Vec<f64>, SparseError> {
        let n = self.n();
        if b.len() != n {
            return Err(SparseError::DimensionMismatch {
                op: "jacobi sweeps",
                expected: n,
                found: b.len(),
            });
        }
        let scaled: Vec<f64> = b.iter().zip(&self.inv_diag).map(|(bi, di)| bi * di).collect();
        if k == 0 {
            return Ok(vec![0.0; n]);
        }
        let mut x = scaled.clone();
        let mut next = vec![0.0; n];
        for _ in 1..k {
            sparse::spmv_into(&self.tt, &x, &mut next)?;
            for (xi, (ni, si)) in x.iter_mut().zip(next.iter().zip(&scaled)) {
                *xi = ni + si;
            }
        }
        Ok(x)
    }
}

/// Dropping rule applied after each recursion step.
#[derive(Debug, Clone, Copy)]
pub enum DropRule<'a> {
    /// No dropping; the iterate is the exact truncated series.
    Keep,
    /// Drop off-diagonal entries with magnitude below `tau`.
    Threshold(f64),
    /// Drop every entry outside the given pattern.
    Pattern(&'a SparsityPattern),
}

impl DropRule<'_> {
    fn apply(&self, m: CsrMatrix) -> std::result::Result<CsrMatrix, SparseError> {
        match *self {
            DropRule::Keep => Ok(m),
            DropRule::Threshold(tau) => sparse::drop_by_threshold(&m, tau),
            DropRule::Pattern(s) => sparse::drop_by_pattern(&m, s),
        }
    }
}

fn is_stationary(prev: &CsrMatrix, next: &CsrMatrix) -> bool {
    if prev.row_ptr() != next.row_ptr() || prev.col_idx() != next.col_idx() {
        return false;
    }
    let scale = next.max_abs();
    prev.values()
        .iter()
        .zip(next.values())
        .all(|(a, b)| (a - b).abs() <= STATIONARY_TOL * scale)
}

/// Runs up to `steps` iterations of `M <- drop(tT M + I)` on the unit-diagonal
/// iterate. Stops early once a step leaves the iterate stationary.
fn recurse(split: &JacobiSplit, mut m: CsrMatrix, steps: usize, rule: DropRule<'_>) -> Result<CsrMatrix> {
    for _ in 0..steps {
        let next = rule.apply(sparse::add_identity(&sparse::spgemm(&split.tt, &m)?)?)?;
        if is_stationary(&m, &next) {
            return Ok(next);
        }
        m = next;
    }
    Ok(m)
}

/// Generic construction: `m` dropped recursion steps from `M = I`, then
/// `M D^{-1}`.
pub fn sait_core(t: &CsrMatrix, kind: TriangularKind, rule: DropRule<'_>, m: usize) -> Result<CsrMatrix> {
    let split = jacobi_split(t, kind)?;
    let iterate = recurse(&split, CsrMatrix::identity(split.n()), m, rule)?;
    Ok(iterate.scale_columns(&split.inv_diag)?)
}

/// Threshold-based approximate inverse of a triangular matrix.
pub fn sait_thr(t: &CsrMatrix, kind: TriangularKind, params: SaitThrParams) -> Result<CsrMatrix> {
    sait_core(t, kind, DropRule::Threshold(params.tau), params.m)
}

/// Pattern-based approximate inverse; also returns the captured pattern.
///
/// The pattern is structural: it holds every position produced by the first
/// `p` products, including values that cancelled to zero.
pub fn sait_pat_with_pattern(
    t: &CsrMatrix,
    kind: TriangularKind,
    params: SaitPatParams,
) -> Result<(CsrMatrix, SparsityPattern)> {
    let split = jacobi_split(t, kind)?;
    let grown = recurse(&split, CsrMatrix::identity(split.n()), params.p, DropRule::Keep)?;
    let pattern = grown.pattern();
    let refined = recurse(&split, grown, params.m, DropRule::Pattern(&pattern))?;
    Ok((refined.scale_columns(&split.inv_diag)?, pattern))
}

/// Pattern-based approximate inverse of a triangular matrix.
pub fn sait_pat(t: &CsrMatrix, kind: TriangularKind, params: SaitPatParams) -> Result<CsrMatrix> {
    sait_pat_with_pattern(t, kind, params).map(|(m, _)| m)
}

/// `k` Jacobi sweeps on `T x = b` from a zero initial guess.
pub fn jacobi_sweeps_apply(
    t: &CsrMatrix,
    kind: TriangularKind,
    b: &[f64],
    k: usize,
) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(SaitError::InvalidParams("sweep count must be at least 1".into()));
    }
    Ok(jacobi_split(t, kind)?.sweeps(b, k)?)
}

/// Threshold-based approximate inverses `(M_L, M_U)` of both ILU factors.
pub fn sait_thr_pair(factors: &IluFactors, params: SaitThrParams) -> Result<(CsrMatrix, CsrMatrix)> {
    Ok((
        sait_thr(&factors.l, IluFactors::L_KIND, params)?,
        sait_thr(&factors.u, IluFactors::U_KIND, params)?,
    ))
}

/// Pattern-based approximate inverses `(M_L, M_U)` of both ILU factors.
pub fn sait_pat_pair(factors: &IluFactors, params: SaitPatParams) -> Result<(CsrMatrix, CsrMatrix)> {
    Ok((
        sait_pat(&factors.l, IluFactors::L_KIND, params)?,
        sait_pat(&factors.u, IluFactors::U_KIND, params)?,
    ))
}

/// Kind of a triangular matrix inferred from its stored entries; a diagonal
/// matrix reports `Lower`. `None` if entries lie on both sides.
pub fn infer_kind(t: &CsrMatrix) -> Option<TriangularKind> {
    if t.is_triangular(Triangle::Lower) {
        Some(TriangularKind::lower())
    } else if t.is_triangular(Triangle::Upper) {
        Some(TriangularKind::upper())
    } else {
        None
    }
}
