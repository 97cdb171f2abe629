use super::{validate_structure, CsrMatrix, Result};

/// Positions-only view of a CSR matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparsityPattern {
    pub fn try_new(nrows: usize, ncols: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>) -> Result<Self> {
        validate_structure(nrows, ncols, &row_ptr, &col_idx)?;
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
        })
    }

    pub fn diagonal(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
        }
    }

    /// Builds a pattern from possibly unsorted, possibly repeated positions.
    pub fn from_positions(nrows: usize, ncols: usize, positions: &[(usize, usize)]) -> Result<Self> {
        let triplets: Vec<_> = positions.iter().map(|&(i, j)| (i, j, 1.0)).collect();
        Ok(pattern_of(&CsrMatrix::from_triplets(nrows, ncols, &triplets)?))
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
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.nrows && self.row(i).binary_search(&j).is_ok()
    }

    /// Iterates over all `(row, col)` positions in row-major order.
    pub fn positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).iter().map(move |&j| (i, j)))
    }

    pub fn is_subset_of(&self, other: &SparsityPattern) -> bool {
        self.shape() == other.shape()
            && (0..self.nrows).all(|i| {
                let theirs = other.row(i);
                self.row(i).iter().all(|j| theirs.binary_search(j).is_ok())
            })
    }

    /// Position-wise union. Panics if the shapes differ.
    pub fn union(&self, other: &SparsityPattern) -> SparsityPattern {
        assert_eq!(self.shape(), other.shape(), "pattern union shape mismatch");
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        let mut col_idx = Vec::with_capacity(self.nnz().max(other.nnz()));
        row_ptr.push(0);
        for i in 0..self.nrows {
            let (a, b) = (self.row(i), other.row(i));
            let (mut p, mut q) = (0, 0);
            while p < a.len() || q < b.len() {
                let next = match (a.get(p), b.get(q)) {
                    (Some(&x), Some(&y)) if x == y => {
                        p += 1;
                        q += 1;
                        x
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        p += 1;
                        x
                    }
                    (Some(_), Some(&y)) => {
                        q += 1;
                        y
                    }
                    (Some(&x), None) => {
                        p += 1;
                        x
                    }
                    (None, Some(&y)) => {
                        q += 1;
                        y
                    }
                    (None, None) => unreachable!(),
                };
                col_idx.push(next);
            }
            row_ptr.push(col_idx.len());
        }
        SparsityPattern {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
        }
    }
}

/// Structural pattern of `m`, stored zeros included.
pub fn pattern_of(m: &CsrMatrix) -> SparsityPattern {
    SparsityPattern {
        nrows: m.nrows(),
        ncols: m.ncols(),
        row_ptr: m.row_ptr().to_vec(),
        col_idx: m.col_idx().to_vec(),
    }
}
