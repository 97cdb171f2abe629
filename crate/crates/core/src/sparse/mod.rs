//! Compressed-sparse-row storage and the kernels the rest of the crate is
//! built from.
//!
//! Every matrix in the crate is a [`CsrMatrix`]: the system matrix, the ILU
//! factors, the Jacobi iteration matrix and the approximate inverses. Column
//! indices inside a row are kept strictly increasing, which lets dropping and
//! pattern operations work as sorted merges.
//!
//! Indices are `usize`, i.e. 64-bit on every supported target, so fill-in on
//! 10^6-row problems cannot overflow the offset array.

mod ops;
mod pattern;
mod trisolve;

use std::fmt;

use thiserror::Error;

pub use ops::{
    add_identity, drop_by_pattern, drop_by_threshold, nnz, nnz_ratio, purge_zeros, spgemm, spmv,
    spmv_into,
};
pub use pattern::{pattern_of, SparsityPattern};
pub use trisolve::trisolve;

/// Rows per work item when a kernel is split across threads. Each row is
/// computed by exactly one thread in a fixed order, so results do not depend
/// on the thread count.
pub(crate) const ROW_BLOCK: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("triplet ({row}, {col}, {value}) is out of range for a {nrows}x{ncols} matrix")]
    TripletOutOfRange {
        row: usize,
        col: usize,
        value: f64,
        nrows: usize,
        ncols: usize,
    },
    #[error("invalid CSR structure: {0}")]
    InvalidStructure(String),
    #[error("{op}: dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{op}: matrix must be square, got {nrows}x{ncols}")]
    NotSquare {
        op: &'static str,
        nrows: usize,
        ncols: usize,
    },
    #[error("matrix is singular: zero or missing diagonal in row {row}")]
    ZeroDiagonal { row: usize },
    #[error("entry ({row}, {col}) violates the {kind} triangular structure")]
    NotTriangular {
        row: usize,
        col: usize,
        kind: Triangle,
    },
    #[error("drop threshold must lie in [0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("reference matrix has no stored entries")]
    EmptyReference,
}

pub type Result<T> = std::result::Result<T, SparseError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Triangle {
    Lower,
    Upper,
}

impl fmt::Display for Triangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Triangle::Lower => f.write_str("lower"),
            Triangle::Upper => f.write_str("upper"),
        }
    }
}

/// Which triangle a matrix occupies and whether its diagonal is the identity.
///
/// Unit diagonals are stored explicitly; the flag records the promise that
/// every stored diagonal value is exactly 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TriangularKind {
    pub triangle: Triangle,
    pub unit_diagonal: bool,
}

impl TriangularKind {
    pub const fn lower() -> Self {
        Self {
            triangle: Triangle::Lower,
            unit_diagonal: false,
        }
    }

    pub const fn upper() -> Self {
        Self {
            triangle: Triangle::Upper,
            unit_diagonal: false,
        }
    }

    pub const fn unit_lower() -> Self {
        Self {
            triangle: Triangle::Lower,
            unit_diagonal: true,
        }
    }

    pub const fn unit_upper() -> Self {
        Self {
            triangle: Triangle::Upper,
            unit_diagonal: true,
        }
    }

    /// True if position `(row, col)` lies inside this triangle (diagonal included).
    #[inline]
    pub fn admits(&self, row: usize, col: usize) -> bool {
        match self.triangle {
            Triangle::Lower => col <= row,
            Triangle::Upper => col >= row,
        }
    }
}

/// A real compressed-sparse-row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

pub(crate) fn validate_structure(
    nrows: usize,
    ncols: usize,
    row_ptr: &[usize],
    col_idx: &[usize],
) -> Result<()> {
    if row_ptr.len() != nrows + 1 {
        return Err(SparseError::InvalidStructure(format!(
            "row_ptr has length {}, expected {}",
            row_ptr.len(),
            nrows + 1
        )));
    }
    if row_ptr[0] != 0 {
        return Err(SparseError::InvalidStructure("row_ptr[0] must be 0".into()));
    }
    if row_ptr[nrows] != col_idx.len() {
        return Err(SparseError::InvalidStructure(format!(
            "row_ptr[nrows] = {} but {} column indices are stored",
            row_ptr[nrows],
            col_idx.len()
        )));
    }
    for i in 0..nrows {
        let (start, end) = (row_ptr[i], row_ptr[i + 1]);
        if start > end {
            return Err(SparseError::InvalidStructure(format!(
                "row_ptr decreases at row {i}"
            )));
        }
        let cols = &col_idx[start..end];
        for (k, &c) in cols.iter().enumerate() {
            if c >= ncols {
                return Err(SparseError::InvalidStructure(format!(
                    "column {c} in row {i} is out of range (ncols = {ncols})"
                )));
            }
            if k > 0 && cols[k - 1] >= c {
                return Err(SparseError::InvalidStructure(format!(
                    "columns in row {i} are not strictly increasing"
                )));
            }
        }
    }
    Ok(())
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, checking every structural invariant.
    pub fn try_from_csr(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        validate_structure(nrows, ncols, &row_ptr, &col_idx)?;
        if values.len() != col_idx.len() {
            return Err(SparseError::InvalidStructure(format!(
                "{} values for {} column indices",
                values.len(),
                col_idx.len()
            )));
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Kernels that construct CSR arrays row by row in sorted order use this.
    pub(crate) fn from_csr_unchecked(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert!(validate_structure(nrows, ncols, &row_ptr, &col_idx).is_ok());
        debug_assert_eq!(values.len(), col_idx.len());
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Assembles a matrix from `(row, col, value)` triplets. Duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if let Some(&(row, col, value)) = triplets.iter().find(|t| t.0 >= nrows || t.1 >= ncols) {
            return Err(SparseError::TripletOutOfRange {
                row,
                col,
                value,
                nrows,
                ncols,
            });
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        // stable: duplicates are summed in input order
        sorted.sort_by_key(|t| (t.0, t.1));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self::from_csr_unchecked(nrows, ncols, row_ptr, col_idx, values))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_csr_unchecked(nrows, ncols, vec![0; nrows + 1], Vec::new(), Vec::new())
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_csr_unchecked(n, n, (0..=n).collect(), (0..n).collect(), diag.to_vec())
    }

    /// Dense row-major input; exact zeros are not stored.
    pub fn from_dense(nrows: usize, ncols: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != nrows * ncols {
            return Err(SparseError::DimensionMismatch {
                op: "from_dense",
                expected: nrows * ncols,
                found: dense.len(),
            });
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in dense.chunks(ncols.max(1)).take(nrows) {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        row_ptr.resize(nrows + 1, col_idx.len());
        Ok(Self::from_csr_unchecked(nrows, ncols, row_ptr, col_idx, values))
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// Number of stored entries, explicit zeros included.
    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn into_parts(self) -> (usize, usize, Vec<usize>, Vec<usize>, Vec<f64>) {
        (self.nrows, self.ncols, self.row_ptr, self.col_idx, self.values)
    }

    /// Stored value at `(i, j)`, if the position is in the pattern.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|k| vals[k])
    }

    /// Main diagonal, with zeros where no entry is stored.
    pub fn diagonal(&self) -> Vec<f64> {
        let n = self.nrows.min(self.ncols);
        (0..n).map(|i| self.get(i, i).unwrap_or(0.0)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let dst = next[c];
                col_idx[dst] = i;
                values[dst] = v;
                next[c] += 1;
            }
        }
        Self::from_csr_unchecked(self.ncols, self.nrows, row_ptr, col_idx, values)
    }

    /// Row-major dense copy. Intended for small matrices and tests.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.nrows * self.ncols];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                dense[i * self.ncols + c] += v;
            }
        }
        dense
    }

    /// Returns `self * diag(scale)`.
    pub fn scale_columns(&self, scale: &[f64]) -> Result<Self> {
        if scale.len() != self.ncols {
            return Err(SparseError::DimensionMismatch {
                op: "scale_columns",
                expected: self.ncols,
                found: scale.len(),
            });
        }
        let values = self
            .col_idx
            .iter()
            .zip(&self.values)
            .map(|(&c, &v)| v * scale[c])
            .collect();
        Ok(Self::from_csr_unchecked(
            self.nrows,
            self.ncols,
            self.row_ptr.clone(),
            self.col_idx.clone(),
            values,
        ))
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_triangular(&self, triangle: Triangle) -> bool {
        let kind = TriangularKind {
            triangle,
            unit_diagonal: false,
        };
        (0..self.nrows).all(|i| self.row(i).0.iter().all(|&c| kind.admits(i, c)))
    }

    /// Structural and numeric symmetry of the stored arrays.
    pub fn is_symmetric(&self) -> bool {
        self.is_square() && *self == self.transpose()
    }

    pub fn pattern(&self) -> SparsityPattern {
        pattern_of(self)
    }
}
