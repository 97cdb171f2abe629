use rayon::prelude::*;

use super::{CsrMatrix, Result, SparseError, SparsityPattern, ROW_BLOCK};

/// `y = A x`.
pub fn spmv(a: &CsrMatrix, x: &[f64]) -> Result<Vec<f64>> {
    let mut y = vec![0.0; a.nrows()];
    spmv_into(a, x, &mut y)?;
    Ok(y)
}

/// `y = A x` into a caller-provided buffer. Each row is accumulated in
/// stored-column order.
pub fn spmv_into(a: &CsrMatrix, x: &[f64], y: &mut [f64]) -> Result<()> {
    if x.len() != a.ncols() {
        return Err(SparseError::DimensionMismatch {
            op: "spmv",
            expected: a.ncols(),
            found: x.len(),
        });
    }
    if y.len() != a.nrows() {
        return Err(SparseError::DimensionMismatch {
            op: "spmv (output)",
            expected: a.nrows(),
            found: y.len(),
        });
    }
    let row_dot = |i: usize| {
        let (cols, vals) = a.row(i);
        cols.iter().zip(vals).fold(0.0, |acc, (&c, &v)| acc + v * x[c])
    };
    if a.nrows() <= ROW_BLOCK {
        y.iter_mut().enumerate().for_each(|(i, yi)| *yi = row_dot(i));
    } else {
        y.par_chunks_mut(ROW_BLOCK).enumerate().for_each(|(b, chunk)| {
            let base = b * ROW_BLOCK;
            chunk
                .iter_mut()
                .enumerate()
                .for_each(|(k, yi)| *yi = row_dot(base + k));
        });
    }
    Ok(())
}

/// CSR arrays for a contiguous block of output rows.
struct RowBlock {
    counts: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

fn assemble(nrows: usize, ncols: usize, blocks: Vec<RowBlock>) -> CsrMatrix {
    let total: usize = blocks.iter().map(|b| b.col_idx.len()).sum();
    let mut row_ptr = Vec::with_capacity(nrows + 1);
    let mut col_idx = Vec::with_capacity(total);
    let mut values = Vec::with_capacity(total);
    row_ptr.push(0);
    for block in blocks {
        for c in block.counts {
            let last = *row_ptr.last().unwrap();
            row_ptr.push(last + c);
        }
        col_idx.extend_from_slice(&block.col_idx);
        values.extend_from_slice(&block.values);
    }
    CsrMatrix::from_csr_unchecked(nrows, ncols, row_ptr, col_idx, values)
}

/// Applies `build_row` to every row of an `nrows`-row result, block-parallel.
fn map_rows<S, I, F>(nrows: usize, ncols: usize, init: I, build_row: F) -> CsrMatrix
where
    S: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize, &mut Vec<usize>, &mut Vec<f64>) + Sync + Send,
{
    let nblocks = nrows.div_ceil(ROW_BLOCK);
    let run_block = |state: &mut S, b: usize| {
        let rows = b * ROW_BLOCK..((b + 1) * ROW_BLOCK).min(nrows);
        let mut block = RowBlock {
            counts: Vec::with_capacity(rows.len()),
            col_idx: Vec::new(),
            values: Vec::new(),
        };
        for i in rows {
            let before = block.col_idx.len();
            build_row(state, i, &mut block.col_idx, &mut block.values);
            block.counts.push(block.col_idx.len() - before);
        }
        block
    };
    let blocks: Vec<RowBlock> = if nblocks <= 1 {
        let mut state = init();
        (0..nblocks).map(|b| run_block(&mut state, b)).collect()
    } else {
        (0..nblocks)
            .into_par_iter()
            .map_init(&init, |state, b| run_block(state, b))
            .collect()
    };
    assemble(nrows, ncols, blocks)
}

/// Sparse product `A B` (row-by-row Gustavson).
///
/// Every position reached by the structural product is stored, even when the
/// contributions cancel to exactly zero. For each output row the contributions
/// are accumulated in increasing column order of the row of `A`.
pub fn spgemm(a: &CsrMatrix, b: &CsrMatrix) -> Result<CsrMatrix> {
    if a.ncols() != b.nrows() {
        return Err(SparseError::DimensionMismatch {
            op: "spgemm",
            expected: a.ncols(),
            found: b.nrows(),
        });
    }
    let ncols = b.ncols();
    let init = || (vec![0.0f64; ncols], vec![usize::MAX; ncols], Vec::<usize>::new());
    Ok(map_rows(a.nrows(), ncols, init, |state, i, out_cols, out_vals| {
        let (acc, marker, touched) = state;
        touched.clear();
        let (a_cols, a_vals) = a.row(i);
        for (&k, &a_ik) in a_cols.iter().zip(a_vals) {
            let (b_cols, b_vals) = b.row(k);
            for (&j, &b_kj) in b_cols.iter().zip(b_vals) {
                if marker[j] != i {
                    marker[j] = i;
                    acc[j] = a_ik * b_kj;
                    touched.push(j);
                } else {
                    acc[j] += a_ik * b_kj;
                }
            }
        }
        touched.sort_unstable();
        for &j in touched.iter() {
            out_cols.push(j);
            out_vals.push(acc[j]);
        }
    }))
}

/// `M + I`, with a diagonal entry present in every row of the result.
pub fn add_identity(m: &CsrMatrix) -> Result<CsrMatrix> {
    if !m.is_square() {
        return Err(SparseError::NotSquare {
            op: "add_identity",
            nrows: m.nrows(),
            ncols: m.ncols(),
        });
    }
    let n = m.nrows();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(m.nnz() + n);
    let mut values = Vec::with_capacity(m.nnz() + n);
    row_ptr.push(0);
    for i in 0..n {
        let (cols, vals) = m.row(i);
        let split = cols.partition_point(|&c| c < i);
        col_idx.extend_from_slice(&cols[..split]);
        values.extend_from_slice(&vals[..split]);
        let rest = if cols.get(split) == Some(&i) {
            col_idx.push(i);
            values.push(vals[split] + 1.0);
            split + 1
        } else {
            col_idx.push(i);
            values.push(1.0);
            split
        };
        col_idx.extend_from_slice(&cols[rest..]);
        values.extend_from_slice(&vals[rest..]);
        row_ptr.push(col_idx.len());
    }
    Ok(CsrMatrix::from_csr_unchecked(n, n, row_ptr, col_idx, values))
}

fn filter_entries<F>(m: &CsrMatrix, keep: F) -> CsrMatrix
where
    F: Fn(usize, usize, f64) -> bool,
{
    let mut row_ptr = Vec::with_capacity(m.nrows() + 1);
    let mut col_idx = Vec::with_capacity(m.nnz());
    let mut values = Vec::with_capacity(m.nnz());
    row_ptr.push(0);
    for i in 0..m.nrows() {
        let (cols, vals) = m.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            if keep(i, c, v) {
                col_idx.push(c);
                values.push(v);
            }
        }
        row_ptr.push(col_idx.len());
    }
    CsrMatrix::from_csr_unchecked(m.nrows(), m.ncols(), row_ptr, col_idx, values)
}

/// Removes every off-diagonal entry with `|v| < tau`. Diagonal entries are
/// always kept. `tau = 0` returns `m` unchanged.
pub fn drop_by_threshold(m: &CsrMatrix, tau: f64) -> Result<CsrMatrix> {
    if !(0.0..1.0).contains(&tau) {
        return Err(SparseError::InvalidThreshold(tau));
    }
    if tau == 0.0 {
        return Ok(m.clone());
    }
    Ok(filter_entries(m, |i, j, v| i == j || v.abs() >= tau))
}

/// Removes every entry outside `s`; retained values are untouched.
pub fn drop_by_pattern(m: &CsrMatrix, s: &SparsityPattern) -> Result<CsrMatrix> {
    if m.shape() != s.shape() {
        return Err(SparseError::DimensionMismatch {
            op: "drop_by_pattern",
            expected: m.nrows() * m.ncols(),
            found: s.nrows() * s.ncols(),
        });
    }
    Ok(filter_entries(m, |i, j, _| s.row(i).binary_search(&j).is_ok()))
}

/// Removes stored exact zeros (off the diagonal).
pub fn purge_zeros(m: &CsrMatrix) -> CsrMatrix {
    filter_entries(m, |i, j, v| i == j || v != 0.0)
}

pub fn nnz(m: &CsrMatrix) -> usize {
    m.nnz()
}

/// `nnz(m) / nnz(reference)`.
pub fn nnz_ratio(m: &CsrMatrix, reference: &CsrMatrix) -> Result<f64> {
    if reference.nnz() == 0 {
        return Err(SparseError::EmptyReference);
    }
    Ok(m.nnz() as f64 / reference.nnz() as f64)
}
