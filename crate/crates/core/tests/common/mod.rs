//! Random generators and dense oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sait_core::{CsrMatrix, Triangle};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random sparse matrix with roughly `density * nrows * ncols` entries in [-1, 1).
pub fn random_sparse(rng: &mut ChaCha8Rng, nrows: usize, ncols: usize, density: f64) -> CsrMatrix {
    let mut triplets = Vec::new();
    for i in 0..nrows {
        for j in 0..ncols {
            if rng.gen_bool(density.clamp(0.0, 1.0)) {
                triplets.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    CsrMatrix::from_triplets(nrows, ncols, &triplets).unwrap()
}

/// Random strictly triangular matrix (empty diagonal).
pub fn random_strict_triangular(rng: &mut ChaCha8Rng, n: usize, density: f64, tri: Triangle) -> CsrMatrix {
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let inside = match tri {
                Triangle::Lower => j < i,
                Triangle::Upper => j > i,
            };
            if inside && rng.gen_bool(density.clamp(0.0, 1.0)) {
                triplets.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &triplets).unwrap()
}

/// Random triangular matrix whose diagonal dominates its row: `|t_ii| > Σ_j |t_ij|`.
pub fn random_dominant_triangular(rng: &mut ChaCha8Rng, n: usize, density: f64, tri: Triangle) -> CsrMatrix {
    let strict = random_strict_triangular(rng, n, density, tri);
    let mut triplets = Vec::new();
    for i in 0..n {
        let (cols, vals) = strict.row(i);
        let mut off = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            triplets.push((i, j, v));
            off += v.abs();
        }
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        triplets.push((i, i, sign * (1.0 + off + rng.gen_range(0.0..1.0))));
    }
    CsrMatrix::from_triplets(n, n, &triplets).unwrap()
}

/// Random symmetric, strictly diagonally dominant matrix with positive diagonal.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, density: f64) -> CsrMatrix {
    let lower = random_strict_triangular(rng, n, density, Triangle::Lower);
    let mut triplets = Vec::new();
    let mut off = vec![0.0; n];
    for i in 0..n {
        let (cols, vals) = lower.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            triplets.push((i, j, v));
            triplets.push((j, i, v));
            off[i] += v.abs();
            off[j] += v.abs();
        }
    }
    for (i, o) in off.iter().enumerate() {
        triplets.push((i, i, 1.0 + o + rng.gen_range(0.0..1.0)));
    }
    CsrMatrix::from_triplets(n, n, &triplets).unwrap()
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Row-major dense product of an `n x k` and a `k x m` matrix.
pub fn dense_matmul(a: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * m];
    for i in 0..n {
        for l in 0..k {
            let ail = a[i * k + l];
            if ail == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i * m + j] += ail * b[l * m + j];
            }
        }
    }
    c
}

pub fn dense_matvec(a: &[f64], x: &[f64], n: usize, m: usize) -> Vec<f64> {
    (0..n).map(|i| (0..m).map(|j| a[i * m + j] * x[j]).sum()).collect()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// `max|got - want| / max|want|`, or the absolute error when `want` is zero.
pub fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    assert_eq!(got.len(), want.len());
    let diff = got.iter().zip(want).fold(0.0f64, |acc, (g, w)| acc.max((g - w).abs()));
    let scale = max_abs(want);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// `T M - I` as a dense row-major matrix.
pub fn identity_defect(t: &CsrMatrix, m: &CsrMatrix) -> Vec<f64> {
    let n = t.nrows();
    let mut d = dense_matmul(&t.to_dense(), &m.to_dense(), n, n, n);
    for i in 0..n {
        d[i * n + i] -= 1.0;
    }
    d
}

pub fn dense_norm_inf(a: &[f64], n: usize, m: usize) -> f64 {
    (0..n)
        .map(|i| a[i * m..(i + 1) * m].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Boolean pattern of `Σ_{i=0}^{p} S^i` where `S` is the off-diagonal pattern
/// of `t`, computed by repeated dense boolean products.
pub fn series_pattern(t: &CsrMatrix, p: usize) -> Vec<Vec<bool>> {
    let n = t.nrows();
    let mut s = vec![vec![false; n]; n];
    for i in 0..n {
        for &j in t.row(i).0 {
            if i != j {
                s[i][j] = true;
            }
        }
    }
    let mut acc = vec![vec![false; n]; n];
    let mut power = vec![vec![false; n]; n];
    for i in 0..n {
        acc[i][i] = true;
        power[i][i] = true;
    }
    for _ in 0..p {
        let mut next = vec![vec![false; n]; n];
        for i in 0..n {
            for l in 0..n {
                if s[i][l] {
                    for j in 0..n {
                        next[i][j] |= power[l][j];
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                acc[i][j] |= next[i][j];
            }
        }
        power = next;
    }
    acc
}

/// Dense LU without pivoting (Doolittle). Returns `(L, U)` row-major.
pub fn dense_lu(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u = a.to_vec();
    let mut l = vec![0.0; n * n];
    for k in 0..n {
        l[k * n + k] = 1.0;
        for i in k + 1..n {
            let f = u[i * n + k] / u[k * n + k];
            l[i * n + k] = f;
            for j in k..n {
                u[i * n + j] -= f * u[k * n + j];
            }
        }
    }
    (l, u)
}
