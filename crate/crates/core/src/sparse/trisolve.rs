use super::{CsrMatrix, Result, SparseError, Triangle, TriangularKind};

/// Solves `T x = b` by forward (lower) or backward (upper) substitution.
///
/// Entries outside the declared triangle are reported as an error rather than
/// ignored. A unit-diagonal kind tolerates a missing diagonal entry (treated
/// as 1); otherwise a zero or missing diagonal is a singular-matrix error.
pub fn trisolve(t: &CsrMatrix, kind: TriangularKind, b: &[f64]) -> Result<Vec<f64>> {
    if !t.is_square() {
        return Err(SparseError::NotSquare {
            op: "trisolve",
            nrows: t.nrows(),
            ncols: t.ncols(),
        });
    }
    let n = t.nrows();
    if b.len() != n {
        return Err(SparseError::DimensionMismatch {
            op: "trisolve",
            expected: n,
            found: b.len(),
        });
    }
    let mut x = vec![0.0; n];
    let solve_row = |i: usize, x: &mut [f64]| -> Result<()> {
        let (cols, vals) = t.row(i);
        let mut sum = b[i];
        let mut diag = None;
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i {
                diag = Some(v);
            } else if kind.admits(i, j) {
                sum -= v * x[j];
            } else {
                return Err(SparseError::NotTriangular {
                    row: i,
                    col: j,
                    kind: kind.triangle,
                });
            }
        }
        let d = match diag {
            None if kind.unit_diagonal => 1.0,
            Some(d) if d != 0.0 => d,
            _ => return Err(SparseError::ZeroDiagonal { row: i }),
        };
        x[i] = sum / d;
        Ok(())
    };
    match kind.triangle {
        Triangle::Lower => {
            for i in 0..n {
                solve_row(i, &mut x)?;
            }
        }
        Triangle::Upper => {
            for i in (0..n).rev() {
                solve_row(i, &mut x)?;
            }
        }
    }
    Ok(x)
}
