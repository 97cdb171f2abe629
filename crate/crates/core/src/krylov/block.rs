use nalgebra::DMatrix;

use crate::sparse::{self, CsrMatrix, SparseError};

/// Sparse-times-dense-block product `A X`.
pub fn spmm(a: &CsrMatrix, x: &DMatrix<f64>) -> Result<DMatrix<f64>, SparseError> {
    if x.nrows() != a.ncols() {
        return Err(SparseError::DimensionMismatch {
            op: "spmm",
            expected: a.ncols(),
            found: x.nrows(),
        });
    }
    let mut y = DMatrix::zeros(a.nrows(), x.ncols());
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(y);
    }
    for (src, dst) in x
        .as_slice()
        .chunks(a.ncols())
        .zip(y.as_mut_slice().chunks_mut(a.nrows()))
    {
        sparse::spmv_into(a, src, dst)?;
    }
    Ok(y)
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted
/// ascending. The input is symmetrized first.
///
/// Uses faer's self-adjoint solver; nalgebra's `SymmetricEigen` returns
/// eigenvectors with residuals far above rounding level on some of the
/// Rayleigh–Ritz matrices met in LOBPCG.
pub(crate) fn sorted_eigen(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = h.nrows();
    let sym = faer::Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
    let Ok(eig) = sym.self_adjoint_eigen(faer::Side::Lower) else {
        return (vec![f64::NAN; n], DMatrix::from_element(n, n, f64::NAN));
    };
    let (s, u) = (eig.S(), eig.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let values = order.iter().map(|&k| s[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
    (values, vectors)
}

/// Gram-eigenvalue orthonormalization (SVQB).
///
/// Returns the transform `T` such that `Y T` has orthonormal columns, with
/// directions whose scaled Gram eigenvalue falls below `drop_tol` removed.
/// `None` when no direction survives.
pub(crate) fn svqb_transform(y: &DMatrix<f64>, drop_tol: f64) -> Option<DMatrix<f64>> {
    let k = y.ncols();
    if k == 0 {
        return None;
    }
    let gram = y.transpose() * y;
    let scale: Vec<f64> = (0..k)
        .map(|j| {
            let d = gram[(j, j)];
            if d > 0.0 && d.is_finite() {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let scaled = DMatrix::from_fn(k, k, |i, j| gram[(i, j)] * scale[i] * scale[j]);
    let (vals, vecs) = sorted_eigen(&scaled);
    let top = vals.last().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return None;
    }
    let keep: Vec<usize> = (0..k).filter(|&i| vals[i] > drop_tol * top).collect();
    if keep.is_empty() {
        return None;
    }
    Some(DMatrix::from_fn(k, keep.len(), |i, j| {
        scale[i] * vecs[(i, keep[j])] / vals[keep[j]].sqrt()
    }))
}

/// Orthonormalizes the columns of `y` with two SVQB passes; returns the new
/// block and the combined transform.
pub(crate) fn orthonormalize(y: &DMatrix<f64>, drop_tol: f64) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let t1 = svqb_transform(y, drop_tol)?;
    let q1 = y * &t1;
    let t2 = svqb_transform(&q1, drop_tol)?;
    let q2 = &q1 * &t2;
    Some((q2, t1 * t2))
}

/// `Y <- Y - X (X' Y)` twice; `X` must have orthonormal columns.
pub(crate) fn project_out(x: &DMatrix<f64>, y: &mut DMatrix<f64>) {
    for _ in 0..2 {
        let coeff = x.transpose() * &*y;
        *y -= x * coeff;
    }
}

/// Orthonormal basis of `span(y)` orthogonal to the orthonormal block `x`.
///
/// Orthonormalizing after the projection can bring back components along `x`
/// when `y` is ill-conditioned, so the two steps are repeated until
/// `max |X' Q| <= 1e-14` (at most three rounds).
pub(crate) fn orthonormalize_against(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    drop_tol: f64,
) -> Option<DMatrix<f64>> {
    let mut q = y.clone();
    for _ in 0..3 {
        project_out(x, &mut q);
        q = orthonormalize(&q, drop_tol)?.0;
        if (x.transpose() * &q).amax() <= 1e-14 {
            break;
        }
    }
    Some(q)
}
