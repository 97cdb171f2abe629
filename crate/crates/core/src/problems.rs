//! Test problems: the 3D finite-difference Laplacian, Matrix Market files
//! and right-hand sides.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::sparse::{self, CsrMatrix, SparseError};

/// Upper bound on the bytes a generated matrix may occupy.
pub const MAX_MATRIX_BYTES: u64 = 1 << 35;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("grid with n = {n} needs about {bytes} bytes, above the {limit} byte budget")]
    Capacity { n: usize, bytes: u128, limit: u64 },
    #[error("grid size must be at least 1")]
    EmptyGrid,
    #[error("matrix market line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Uniform grid on the unit cube with `n` interior points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3D {
    pub n: usize,
}

impl Grid3D {
    pub fn new(n: usize) -> Result<Self, ProblemError> {
        if n == 0 {
            return Err(ProblemError::EmptyGrid);
        }
        Ok(Self { n })
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n as f64 + 1.0)
    }

    pub fn dim(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Lexicographic index with `i` fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    pub fn nnz(&self) -> usize {
        7 * self.dim() - 6 * self.n * self.n
    }
}

/// Seven-point Laplacian on the `n^3` interior grid with homogeneous
/// Dirichlet conditions, unscaled: 6 on the diagonal, -1 for each neighbour.
pub fn laplacian_3d(n: usize) -> Result<CsrMatrix, ProblemError> {
    let grid = Grid3D::new(n)?;
    let dim = (n as u128).pow(3);
    let nnz = 7 * dim - 6 * (n as u128).pow(2);
    let bytes = nnz * 16 + (dim + 1) * 8;
    if bytes > MAX_MATRIX_BYTES as u128 {
        return Err(ProblemError::Capacity {
            n,
            bytes,
            limit: MAX_MATRIX_BYTES,
        });
    }
    let dim = grid.dim();
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut col_idx = Vec::with_capacity(grid.nnz());
    let mut values = Vec::with_capacity(grid.nnz());
    row_ptr.push(0);
    let plane = n * n;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let row = grid.index(i, j, k);
                let mut push = |c: usize, v: f64| {
                    col_idx.push(c);
                    values.push(v);
                };
                if k > 0 {
                    push(row - plane, -1.0);
                }
                if j > 0 {
                    push(row - n, -1.0);
                }
                if i > 0 {
                    push(row - 1, -1.0);
                }
                push(row, 6.0);
                if i + 1 < n {
                    push(row + 1, -1.0);
                }
                if j + 1 < n {
                    push(row + n, -1.0);
                }
                if k + 1 < n {
                    push(row + plane, -1.0);
                }
                row_ptr.push(col_idx.len());
            }
        }
    }
    Ok(CsrMatrix::try_from_csr(dim, dim, row_ptr, col_idx, values)?)
}

/// The `count` smallest eigenvalues of [`laplacian_3d`], ascending:
/// `4 (sin²(π i h/2) + sin²(π j h/2) + sin²(π k h/2))`, `h = 1/(n+1)`.
pub fn laplacian_3d_eigenvalues(n: usize, count: usize) -> Vec<f64> {
    let h = 1.0 / (n as f64 + 1.0);
    let s: Vec<f64> = (1..=n)
        .map(|i| 4.0 * (std::f64::consts::PI * i as f64 * h / 2.0).sin().powi(2))
        .collect();
    let mut all = Vec::with_capacity(n * n * n);
    for a in &s {
        for b in &s {
            for c in &s {
                all.push(a + b + c);
            }
        }
    }
    all.sort_by(f64::total_cmp);
    all.truncate(count);
    all
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn parse_err(line: usize, msg: impl Into<String>) -> ProblemError {
    ProblemError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Reads a real Matrix Market coordinate file; symmetric storage is
/// expanded to both triangles.
pub fn mm_read(path: impl AsRef<Path>) -> Result<CsrMatrix, ProblemError> {
    mm_parse(BufReader::new(File::open(path)?))
}

/// [`mm_read`] over any reader.
pub fn mm_parse<R: Read>(reader: R) -> Result<CsrMatrix, ProblemError> {
    let mut lines = BufReader::new(reader).lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_err(1, "header must read '%%MatrixMarket matrix coordinate <field> <symmetry>'"));
    }
    if tokens[1] != "matrix" || tokens[2] != "coordinate" {
        return Err(parse_err(1, format!("unsupported object/format '{} {}'", tokens[1], tokens[2])));
    }
    match tokens[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(parse_err(1, format!("unsupported field '{other}'"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    let mut entries = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(lineno, "size line must hold 'rows cols entries'"));
                }
                let parse = |s: &str| s.parse::<usize>().map_err(|_| parse_err(lineno, format!("bad size '{s}'")));
                let dims = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                if symmetry == Symmetry::Symmetric && dims.0 != dims.1 {
                    return Err(parse_err(lineno, "symmetric matrix must be square"));
                }
                triplets.reserve(match symmetry {
                    Symmetry::General => dims.2,
                    Symmetry::Symmetric => 2 * dims.2,
                });
                size = Some(dims);
            }
            Some((nrows, ncols, nnz)) => {
                if fields.len() != 3 {
                    return Err(parse_err(lineno, "entry line must hold 'row col value'"));
                }
                if entries == nnz {
                    return Err(parse_err(lineno, format!("more than the declared {nnz} entries")));
                }
                let index = |s: &str, bound: usize| -> Result<usize, ProblemError> {
                    let v = s
                        .parse::<usize>()
                        .map_err(|_| parse_err(lineno, format!("bad index '{s}'")))?;
                    if v == 0 || v > bound {
                        return Err(parse_err(lineno, format!("index {v} out of bounds 1..={bound}")));
                    }
                    Ok(v - 1)
                };
                let i = index(fields[0], nrows)?;
                let j = index(fields[1], ncols)?;
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad value '{}'", fields[2])))?;
                triplets.push((i, j, v));
                if symmetry == Symmetry::Symmetric && i != j {
                    triplets.push((j, i, v));
                }
                entries += 1;
            }
        }
    }
    let (nrows, ncols, nnz) = size.ok_or_else(|| parse_err(1, "missing size line"))?;
    if entries != nnz {
        return Err(parse_err(0, format!("declared {nnz} entries but found {entries}")));
    }
    Ok(CsrMatrix::from_triplets(nrows, ncols, &triplets)?)
}

/// Writes `m` as a real general coordinate file. Values are printed with
/// round-trip precision.
pub fn mm_write(path: impl AsRef<Path>, m: &CsrMatrix) -> Result<(), ProblemError> {
    let mut w = BufWriter::new(File::create(path)?);
    mm_emit(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn mm_emit<W: Write>(w: &mut W, m: &CsrMatrix) -> std::io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.nrows(), m.ncols(), m.nnz())?;
    for i in 0..m.nrows() {
        let (cols, vals) = m.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            writeln!(w, "{} {} {:e}", i + 1, c + 1, v)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsMode {
    /// `b = A 1`, so the exact solution is the all-ones vector.
    OnesSolution,
    /// Unit-norm vector with entries drawn uniformly from `[-1, 1)`.
    SeededRandom(u64),
}

pub fn make_rhs(a: &CsrMatrix, mode: RhsMode) -> Vec<f64> {
    match mode {
        RhsMode::OnesSolution => {
            sparse::spmv(a, &vec![1.0; a.ncols()]).expect("ones vector matches the column count")
        }
        RhsMode::SeededRandom(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut b: Vec<f64> = (0..a.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                b.iter_mut().for_each(|v| *v /= norm);
            }
            b
        }
    }
}
