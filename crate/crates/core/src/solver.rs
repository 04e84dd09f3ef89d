//! Compressed-sparse-row matrices and the symmetric positive-definite solvers
//! used by the relative-total-variation filters.
//!
//! All reductions run in index order so results are bit-stable across runs.

use crate::error::{Error, Result};

/// Largest system `solve_dense` accepts.
pub const DENSE_MAX_DIM: usize = 10_000;

/// General sparse matrix in CSR form with sorted, duplicate-free column
/// indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Validates and wraps a raw CSR triplet.
    pub fn from_raw_parts(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::Contract(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if row_offsets[0] != 0 || *row_offsets.last().unwrap() != col_indices.len() {
            return Err(Error::Contract("row_offsets must start at 0 and end at nnz".into()));
        }
        if col_indices.len() != values.len() {
            return Err(Error::Contract("column_indices and values differ in length".into()));
        }
        for r in 0..n_rows {
            let (lo, hi) = (row_offsets[r], row_offsets[r + 1]);
            if lo > hi {
                return Err(Error::Contract(format!("row_offsets decreases at row {r}")));
            }
            let cols = &col_indices[lo..hi];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Contract(format!("columns of row {r} not strictly increasing")));
            }
            if cols.last().is_some_and(|&c| c >= n_cols) {
                return Err(Error::Contract(format!("column index out of range in row {r}")));
            }
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("matrix entry {k}")));
        }
        Ok(CsrMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds a matrix from `(row, col, value)` entries; duplicates are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for &(r, c, v) in entries {
            if r >= n_rows || c >= n_cols {
                return Err(Error::Contract(format!(
                    "entry ({r}, {c}) outside {n_rows}x{n_cols} matrix"
                )));
            }
            per_row[r].push((c, v));
        }
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        row_offsets.push(0);
        for mut row in per_row {
            // Stable sort keeps duplicate summation in insertion order.
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                if col_indices.len() > *row_offsets.last().unwrap() && *col_indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_indices.push(c);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        CsrMatrix::from_raw_parts(n_rows, n_cols, row_offsets, col_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates `(column, value)` over the stored entries of `row`.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_offsets[row], self.row_offsets[row + 1]);
        self.col_indices[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    /// Stored value at `(row, col)`, zero when structurally absent.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (lo, hi) = (self.row_offsets[row], self.row_offsets[row + 1]);
        match self.col_indices[lo..hi].binary_search(&col) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n_cols || y.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: format!("x of length {}, y of length {}", self.n_cols, self.n_rows),
                actual: format!("x of length {}, y of length {}", x.len(), y.len()),
            });
        }
        for (r, out) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *out = acc;
        }
        Ok(())
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut entries = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                entries.push((c, r, v));
            }
        }
        CsrMatrix::from_triplets(self.n_cols, self.n_rows, &entries)
            .expect("transpose of a valid matrix is valid")
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, row) in dense.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        dense
    }

    /// Entry `(i, j)` stored iff `(j, i)` stored.
    pub fn is_structurally_symmetric(&self) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        (0..self.n_rows).all(|r| {
            self.row(r).all(|(c, _)| {
                let (lo, hi) = (self.row_offsets[c], self.row_offsets[c + 1]);
                self.col_indices[lo..hi].binary_search(&r).is_ok()
            })
        })
    }

    /// `max |A - A^T|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }
}

/// Square, structurally symmetric CSR matrix paired with a right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    matrix: CsrMatrix,
    rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>) -> Result<Self> {
        if matrix.n_rows != matrix.n_cols {
            return Err(Error::Contract(format!(
                "system matrix must be square, got {}x{}",
                matrix.n_rows, matrix.n_cols
            )));
        }
        if rhs.len() != matrix.n_rows {
            return Err(Error::DimensionMismatch {
                expected: format!("rhs of length {}", matrix.n_rows),
                actual: format!("rhs of length {}", rhs.len()),
            });
        }
        if !matrix.is_structurally_symmetric() {
            return Err(Error::Contract("system matrix is not structurally symmetric".into()));
        }
        if let Some(k) = rhs.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("rhs entry {k}")));
        }
        Ok(SparseSystem { matrix, rhs })
    }

    pub fn n(&self) -> usize {
        self.rhs.len()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// `‖A x − b‖ / ‖b‖`, or `‖A x‖` when `b = 0`.
    pub fn relative_residual(&self, x: &[f64]) -> Result<f64> {
        let ax = self.matrix.spmv(x)?;
        let r: Vec<f64> = ax.iter().zip(&self.rhs).map(|(a, b)| b - a).collect();
        let bn = norm(&self.rhs);
        Ok(if bn > 0.0 { norm(&r) / bn } else { norm(&r) })
    }
}

/// Result of an iterative solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PcgSolution {
    pub x: Vec<f64>,
    /// Relative residual of the returned `x`, recomputed from `A x − b`.
    pub residual: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned conjugate gradient, starting from `x = 0`.
///
/// Converges when the relative residual `‖A x − b‖/‖b‖` drops to `tol`. The
/// recursively updated residual is confirmed against the true residual
/// before returning; on disagreement the iteration restarts from the current
/// iterate.
pub fn solve_pcg(system: &SparseSystem, tol: f64, max_iter: usize) -> Result<PcgSolution> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("solver tolerance must be positive, got {tol}")));
    }
    let a = &system.matrix;
    let b = &system.rhs;
    let n = system.n();

    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::Contract(format!(
                    "non-positive diagonal {d} at row {i}; matrix is not positive definite"
                )))
            }
        })
        .collect::<Result<_>>()?;

    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(PcgSolution {
            x,
            residual: 0.0,
            iterations: 0,
        });
    }

    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut residual = 1.0;

    for k in 1..=max_iter {
        a.spmv_into(&p, &mut q)?;
        let pq = dot(&p, &q);
        if !pq.is_finite() || !rz.is_finite() {
            return Err(Error::NonFinite(format!("conjugate gradient iteration {k}")));
        }
        if pq <= 0.0 {
            return Err(Error::Contract(format!(
                "search direction has non-positive curvature {pq:e}; matrix is not positive definite"
            )));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        residual = norm(&r) / b_norm;
        if !residual.is_finite() {
            return Err(Error::NonFinite(format!("residual at iteration {k}")));
        }
        if residual <= tol {
            let true_residual = system.relative_residual(&x)?;
            if true_residual <= tol {
                return Ok(PcgSolution {
                    x,
                    residual: true_residual,
                    iterations: k,
                });
            }
            // Drifted: restart from the true residual.
            let ax = a.spmv(&x)?;
            for i in 0..n {
                r[i] = b[i] - ax[i];
                z[i] = r[i] * inv_diag[i];
                p[i] = z[i];
            }
            rz = dot(&r, &z);
            residual = true_residual;
            continue;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Direct solve by Gaussian elimination with partial pivoting on the
/// expanded dense matrix. Intended as an oracle for small systems.
pub fn solve_dense(system: &SparseSystem) -> Result<Vec<f64>> {
    let n = system.n();
    if n > DENSE_MAX_DIM {
        return Err(Error::Config(format!(
            "dense solve limited to {DENSE_MAX_DIM} unknowns, got {n}"
        )));
    }
    let mut a = system.matrix.to_dense();
    let mut b = system.rhs.clone();

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col] == 0.0 {
            return Err(Error::Singular(col));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (upper, lower) = a.split_at_mut(col + 1);
        let prow = &upper[col];
        for (off, row) in lower.iter_mut().enumerate() {
            let f = row[col] / prow[col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                row[k] -= f * prow[k];
            }
            b[col + 1 + off] -= f * b[col];
        }
    }

    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for k in i + 1..n {
            acc -= a[i][k] * x[k];
        }
        x[i] = acc / a[i][i];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("dense solution".into()));
    }
    Ok(x)
}
