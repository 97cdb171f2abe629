//! Level-of-fill incomplete LU factorization.
//!
//! The symbolic phase assigns every position a fill level,
//!
//! ```text
//! lev(i, j) = 0                                       if A[i, j] is stored (or i == j)
//! lev(i, j) = min_k  lev(i, k) + lev(k, j) + 1        over pivots k < min(i, j)
//! ```
//!
//! and keeps the positions with `lev <= level`. The numeric phase is row-wise
//! (IKJ) Gaussian elimination restricted to that pattern, without pivoting.
//! `L` is unit lower triangular with its diagonal stored; `U` is upper
//! triangular.

use std::collections::BTreeMap;
use std::ops::Bound::{Excluded, Unbounded};

use thiserror::Error;

use crate::sparse::{self, CsrMatrix, SparseError, TriangularKind};

/// Pivots smaller than this multiple of `max |A[i, j]|` count as breakdown.
pub const PIVOT_BREAKDOWN_FACTOR: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IluError {
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error("pivot breakdown in row {row}: |u_kk| = {pivot:e} is below {threshold:e}")]
    PivotBreakdown { row: usize, pivot: f64, threshold: f64 },
}

/// The triangular factors of an ILU(k) factorization, `A ≈ L U`.
#[derive(Clone, Debug, PartialEq)]
pub struct IluFactors {
    pub l: CsrMatrix,
    pub u: CsrMatrix,
    pub level: usize,
}

impl IluFactors {
    pub const L_KIND: TriangularKind = TriangularKind::unit_lower();
    pub const U_KIND: TriangularKind = TriangularKind::upper();

    pub fn nrows(&self) -> usize {
        self.l.nrows()
    }

    /// Stored entries in both factors together.
    pub fn nnz(&self) -> usize {
        self.l.nnz() + self.u.nnz()
    }

    /// Exact application of the preconditioner: solves `L U x = r` with two
    /// substitutions.
    pub fn solve(&self, r: &[f64]) -> Result<Vec<f64>, SparseError> {
        let y = sparse::trisolve(&self.l, Self::L_KIND, r)?;
        sparse::trisolve(&self.u, Self::U_KIND, &y)
    }
}

/// Per-row symbolic result: sorted columns and, for the upper part, levels.
struct SymbolicRow {
    cols: Vec<usize>,
    upper_levels: Vec<(usize, usize)>,
}

fn symbolic_row(
    a: &CsrMatrix,
    i: usize,
    level: usize,
    upper: &[Vec<(usize, usize)>],
) -> SymbolicRow {
    let mut row: BTreeMap<usize, usize> = a.row(i).0.iter().map(|&c| (c, 0)).collect();
    row.insert(i, 0);
    let mut cursor = Unbounded;
    while let Some((&k, &lev_ik)) = row.range((cursor, Excluded(i))).next() {
        cursor = Excluded(k);
        for &(j, lev_kj) in &upper[k] {
            if j <= k {
                continue;
            }
            let lev = lev_ik + lev_kj + 1;
            if lev <= level {
                row.entry(j).and_modify(|l| *l = (*l).min(lev)).or_insert(lev);
            }
        }
    }
    let upper_levels = row.range(i..).map(|(&c, &l)| (c, l)).collect();
    SymbolicRow {
        cols: row.into_keys().collect(),
        upper_levels,
    }
}

/// Computes the ILU(`level`) factors of a square matrix.
pub fn ilu_k(a: &CsrMatrix, level: usize) -> Result<IluFactors, IluError> {
    if !a.is_square() {
        return Err(SparseError::NotSquare {
            op: "ilu_k",
            nrows: a.nrows(),
            ncols: a.ncols(),
        }
        .into());
    }
    let n = a.nrows();
    let threshold = PIVOT_BREAKDOWN_FACTOR * a.max_abs();

    let mut upper_levels: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n);

    let mut l_ptr = vec![0usize];
    let mut l_cols = Vec::with_capacity(a.nnz());
    let mut l_vals = Vec::with_capacity(a.nnz());
    let mut u_ptr = vec![0usize];
    let mut u_cols = Vec::with_capacity(a.nnz());
    let mut u_vals: Vec<f64> = Vec::with_capacity(a.nnz());
    let mut u_diag = Vec::with_capacity(n);

    let mut work = vec![0.0f64; n];
    let mut stamp = vec![usize::MAX; n];

    for i in 0..n {
        let sym = symbolic_row(a, i, level, &upper_levels);
        upper_levels.push(sym.upper_levels);

        for &c in &sym.cols {
            work[c] = 0.0;
            stamp[c] = i;
        }
        let (a_cols, a_vals) = a.row(i);
        for (&c, &v) in a_cols.iter().zip(a_vals) {
            work[c] = v;
        }

        let diag_pos = sym.cols.partition_point(|&c| c < i);
        for &k in &sym.cols[..diag_pos] {
            let l_ik = work[k] / u_diag[k];
            work[k] = l_ik;
            for idx in u_ptr[k]..u_ptr[k + 1] {
                let j = u_cols[idx];
                if j > k && stamp[j] == i {
                    work[j] -= l_ik * u_vals[idx];
                }
            }
        }

        let pivot = work[i];
        if !(pivot.abs() >= threshold) || pivot == 0.0 {
            return Err(IluError::PivotBreakdown {
                row: i,
                pivot: pivot.abs(),
                threshold,
            });
        }

        for &k in &sym.cols[..diag_pos] {
            l_cols.push(k);
            l_vals.push(work[k]);
        }
        l_cols.push(i);
        l_vals.push(1.0);
        l_ptr.push(l_cols.len());

        for &j in &sym.cols[diag_pos..] {
            u_cols.push(j);
            u_vals.push(work[j]);
        }
        u_ptr.push(u_cols.len());
        u_diag.push(pivot);
    }

    Ok(IluFactors {
        l: CsrMatrix::try_from_csr(n, n, l_ptr, l_cols, l_vals)?,
        u: CsrMatrix::try_from_csr(n, n, u_ptr, u_cols, u_vals)?,
        level,
    })
}

/// Largest `|(L U)[i, j] - A[i, j]|` over the stored positions of `A`.
///
/// # Panics
///
/// If the factor shapes do not match `a`.
pub fn ilu_residual_on_pattern(a: &CsrMatrix, factors: &IluFactors) -> f64 {
    assert_eq!(a.shape(), factors.l.shape(), "L shape does not match A");
    assert_eq!(a.shape(), factors.u.shape(), "U shape does not match A");
    let lu = sparse::spgemm(&factors.l, &factors.u).expect("shapes checked above");
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            worst = worst.max((lu.get(i, j).unwrap_or(0.0) - v).abs());
        }
    }
    worst
}
