//! Dense matrix kernels: column-pivoted Householder QR, numerical rank from
//! singular values, triangular solves and products.
//!
//! [`Matrix`] stores its entries in column-major order. Every kernel here walks
//! columns, so column slices are contiguous.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Below this many flops a trailing update runs serially.
const PAR_THRESHOLD: usize = 1 << 16;

/// Dense real matrix, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from column-major data, rejecting empty shapes and non-finite entries.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        let m = Self { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        let mut col_major = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                col_major[i + j * rows] = data[i * cols + j];
            }
        }
        Self::from_col_major(rows, cols, col_major)
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        let flat: Vec<f64> = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Self::from_row_major(rows.len(), cols, &flat)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column-major backing storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(Error::InvalidInput(format!(
                "non-finite entry at ({}, {})",
                k % self.rows,
                k / self.rows
            ))),
            None => Ok(()),
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for (i, &v) in self.col(j).iter().enumerate() {
                t.data[j + i * self.cols] = v;
            }
        }
        t
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::InvalidInput(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let rows = self.rows;
        let mut out = Matrix::zeros(rows, other.cols);
        out.data
            .par_chunks_mut(rows.max(1))
            .enumerate()
            .for_each(|(j, out_col)| {
                for (k, &b) in other.col(j).iter().enumerate() {
                    if b != 0.0 {
                        axpy(b, self.col(k), out_col);
                    }
                }
            });
        Ok(out)
    }

    /// `self * x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        let mut y = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, self.col(j), &mut y);
            }
        }
        y
    }

    /// `selfᵗ * x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "tr_matvec dimension mismatch");
        (0..self.cols).map(|j| dot(self.col(j), x)).collect()
    }

    pub fn select_columns(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * indices.len());
        for &j in indices {
            data.extend_from_slice(self.col(j));
        }
        Matrix {
            rows: self.rows,
            cols: indices.len(),
            data,
        }
    }

    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(indices.len(), self.cols);
        for j in 0..self.cols {
            let src = self.col(j);
            for (r, &i) in indices.iter().enumerate() {
                out.data[r + j * indices.len()] = src[i];
            }
        }
        out
    }

    /// Keeps the first `n` columns.
    pub fn truncate_columns(&self, n: usize) -> Matrix {
        let n = n.min(self.cols);
        Matrix {
            rows: self.rows,
            cols: n,
            data: self.data[..n * self.rows].to_vec(),
        }
    }

    /// Multiplies row `i` by `scale[i]`.
    pub fn scale_rows(&mut self, scale: &[f64]) {
        assert_eq!(scale.len(), self.rows);
        for col in self.data.chunks_mut(self.rows) {
            for (v, s) in col.iter_mut().zip(scale) {
                *v *= s;
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| self.col(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i + j * self.rows]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i + j * self.rows]
    }
}

/// Block length below which [`pairwise_sum`] accumulates directly.
const PAIRWISE_BLOCK: usize = 64;

/// Sums `f(0) + ... + f(n - 1)` by recursive halving, so the rounding error
/// grows with `log n` rather than `n`. Long same-signed sums (squared norms,
/// moments of the constant function) would otherwise drift by `n * eps`.
fn pairwise_sum(n: usize, f: &impl Fn(usize) -> f64) -> f64 {
    fn rec(lo: usize, hi: usize, f: &impl Fn(usize) -> f64) -> f64 {
        if hi - lo <= PAIRWISE_BLOCK {
            let mut acc = [0.0; 4];
            let mut i = lo;
            while i + 4 <= hi {
                for (l, a) in acc.iter_mut().enumerate() {
                    *a += f(i + l);
                }
                i += 4;
            }
            let tail: f64 = (i..hi).map(f).sum();
            (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
        } else {
            let mid = lo + (hi - lo) / 2;
            rec(lo, mid, f) + rec(mid, hi, f)
        }
    }
    rec(0, n, f)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    pairwise_sum(n, &|i| a[i] * b[i])
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Euclidean norm with scaling against overflow.
pub fn norm2(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let ssq = pairwise_sum(x.len(), &|i| {
        let v = x[i] / scale;
        v * v
    });
    scale * ssq.sqrt()
}

/// Column-pivoted QR factorization `a(:, perm) = q * r`.
#[derive(Debug, Clone)]
pub struct PivotedQR {
    /// `rows x k` with orthonormal columns, `k = min(rows, cols)`.
    pub q: Matrix,
    /// `k x cols`, upper triangular (trapezoidal when `cols > rows`) with a
    /// nonnegative, non-increasing diagonal.
    pub r: Matrix,
    /// `perm[j]` is the original index of the column placed at position `j`.
    pub perm: Vec<usize>,
}

/// Householder vectors and `tau` factors left in place by [`householder_qr`].
struct CompactQr {
    a: Matrix,
    tau: Vec<f64>,
    perm: Vec<usize>,
}

fn householder_qr(a: &Matrix, pivoting: bool) -> Result<CompactQr> {
    a.check_finite()?;
    let (m, n) = (a.rows, a.cols);
    let kmax = m.min(n);
    let mut work = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut tau = vec![0.0; kmax];

    // vn1 holds the running partial norms, vn2 the last exactly computed ones.
    let mut vn1: Vec<f64> = (0..n).map(|j| norm2(work.col(j))).collect();
    let mut vn2 = vn1.clone();
    let tol3z = f64::EPSILON.sqrt();

    for k in 0..kmax {
        if pivoting {
            // Strict comparison keeps the lowest index on ties.
            let mut p = k;
            for j in k + 1..n {
                if vn1[j] > vn1[p] {
                    p = j;
                }
            }
            if p != k {
                let (lo, hi) = work.data.split_at_mut(p * m);
                lo[k * m..(k + 1) * m].swap_with_slice(&mut hi[..m]);
                perm.swap(k, p);
                vn1.swap(k, p);
                vn2.swap(k, p);
            }
        }

        // Reflector annihilating work[k+1.., k].
        let col = &mut work.data[k * m..(k + 1) * m];
        let x0 = col[k];
        let tail_norm = norm2(&col[k + 1..]);
        if tail_norm == 0.0 {
            tau[k] = 0.0;
        } else {
            let alpha = norm2(&[x0, tail_norm]);
            let beta = if x0 >= 0.0 { -alpha } else { alpha };
            let scale = 1.0 / (x0 - beta);
            for v in &mut col[k + 1..] {
                *v *= scale;
            }
            tau[k] = (beta - x0) / beta;
            col[k] = beta;
        }

        if tau[k] != 0.0 && k + 1 < n {
            let (head, tail) = work.data.split_at_mut((k + 1) * m);
            let v = &head[k * m..(k + 1) * m];
            let t = tau[k];
            let apply = |c: &mut [f64]| {
                let mut w = c[k];
                w += dot(&v[k + 1..], &c[k + 1..]);
                w *= t;
                c[k] -= w;
                axpy(-w, &v[k + 1..], &mut c[k + 1..]);
            };
            if (m - k) * (n - k) >= PAR_THRESHOLD {
                tail.par_chunks_mut(m).for_each(apply);
            } else {
                tail.chunks_mut(m).for_each(apply);
            }
        }

        if pivoting {
            for j in k + 1..n {
                if vn1[j] != 0.0 {
                    let ratio = work[(k, j)].abs() / vn1[j];
                    let temp = (1.0 - ratio * ratio).max(0.0);
                    let ratio2 = vn1[j] / vn2[j];
                    if temp * ratio2 * ratio2 <= tol3z {
                        vn1[j] = norm2(&work.col(j)[k + 1..]);
                        vn2[j] = vn1[j];
                    } else {
                        vn1[j] *= temp.sqrt();
                    }
                }
            }
        }
    }

    Ok(CompactQr { a: work, tau, perm })
}

impl CompactQr {
    fn r(&self) -> Matrix {
        let (m, n) = (self.a.rows, self.a.cols);
        let k = m.min(n);
        let mut r = Matrix::zeros(k, n);
        for j in 0..n {
            for i in 0..=j.min(k - 1) {
                r[(i, j)] = self.a[(i, j)];
            }
        }
        r
    }

    /// Accumulates the first `k` columns of `Q`.
    fn q(&self) -> Matrix {
        let m = self.a.rows;
        let k = self.tau.len();
        let mut q = Matrix::zeros(m, k);
        for j in 0..k {
            q[(j, j)] = 1.0;
        }
        for h in (0..k).rev() {
            let t = self.tau[h];
            if t == 0.0 {
                continue;
            }
            let v = self.a.col(h);
            let apply = |c: &mut [f64]| {
                let mut w = c[h];
                w += dot(&v[h + 1..], &c[h + 1..]);
                w *= t;
                c[h] -= w;
                axpy(-w, &v[h + 1..], &mut c[h + 1..]);
            };
            // Columns before h are untouched by reflector h.
            let tail = &mut q.data[h * m..];
            if (m - h) * (k - h) >= PAR_THRESHOLD {
                tail.par_chunks_mut(m).for_each(apply);
            } else {
                tail.chunks_mut(m).for_each(apply);
            }
        }
        q
    }
}

/// Householder QR with column pivoting: at each step the remaining column of
/// largest residual norm is moved to the front (ties go to the lowest index).
pub fn pivoted_qr(a: &Matrix) -> Result<PivotedQR> {
    let compact = householder_qr(a, true)?;
    let mut q = compact.q();
    let mut r = compact.r();
    // Flip signs so the diagonal of r is nonnegative.
    for k in 0..r.rows {
        if r[(k, k)] < 0.0 {
            for j in k..r.cols {
                r[(k, j)] = -r[(k, j)];
            }
            for v in q.col_mut(k) {
                *v = -*v;
            }
        }
    }
    Ok(PivotedQR {
        q,
        r,
        perm: compact.perm,
    })
}

/// Singular values of `a` in non-increasing order.
///
/// A tall matrix is first reduced to its triangular QR factor, which has the
/// same singular values; only the small factor goes through the SVD.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    a.check_finite()?;
    let tall;
    let a = if a.rows >= a.cols {
        a
    } else {
        tall = a.transpose();
        &tall
    };
    let r = householder_qr(a, false)?.r();
    let small = nalgebra::DMatrix::from_column_slice(r.rows, r.cols, &r.data);
    let mut sv: Vec<f64> = small.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    Ok(sv)
}

/// Default relative rank tolerance: `max(rows, cols) * eps`.
pub fn default_rank_rtol(a: &Matrix) -> f64 {
    a.rows.max(a.cols) as f64 * f64::EPSILON
}

/// Number of singular values above `rtol * sigma_max`.
pub fn numerical_rank(a: &Matrix, rtol: Option<f64>) -> Result<usize> {
    let sv = singular_values(a)?;
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0);
    }
    let tol = rtol.unwrap_or_else(|| default_rank_rtol(a)) * smax;
    Ok(sv.iter().filter(|&&s| s > tol).count())
}

/// Back substitution for `r x = rhs` with `r` square upper triangular.
pub fn solve_upper_triangular(r: &Matrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = r.rows;
    if r.cols != n || rhs.len() != n {
        return Err(Error::InvalidInput(format!(
            "need a square system, got {}x{} with rhs of length {}",
            r.rows,
            r.cols,
            rhs.len()
        )));
    }
    let max_diag = (0..n).fold(0.0f64, |m, i| m.max(r[(i, i)].abs()));
    let threshold = 1e-14 * max_diag;
    for i in 0..n {
        let d = r[(i, i)].abs();
        if d == 0.0 || d < threshold {
            return Err(Error::Singular {
                index: i,
                value: d,
                threshold,
            });
        }
    }
    let mut x = rhs.to_vec();
    for j in (0..n).rev() {
        x[j] /= r[(j, j)];
        let xj = x[j];
        axpy(-xj, &r.col(j)[..j], &mut x[..j]);
    }
    Ok(x)
}

/// Inverse of a nonsingular upper triangular matrix, column by column.
pub fn invert_upper_triangular(r: &Matrix) -> Result<Matrix> {
    let n = r.rows;
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        // Only the leading (j+1) block contributes to column j of the inverse.
        let x = solve_upper_triangular(r, &e)?;
        inv.col_mut(j).copy_from_slice(&x);
    }
    Ok(inv)
}
