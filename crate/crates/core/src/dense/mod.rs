//! Column-major dense matrices and the handful of kernels the solver needs.
//!
//! Every kernel runs a fixed loop nesting, so results are bit-reproducible
//! across runs. In `matmul`, each output column is computed by the same
//! sequence of operations no matter how columns are grouped internally.

mod chol;
mod eig;
mod qr;
mod svd;

use std::ops::{Index, IndexMut, Range};

use rand::Rng;

use crate::error::{contract_err, dim_err, Result};
use crate::scalar::Scalar;

pub use chol::{cholesky, solve_upper_right, CholeskyFailure};
pub use eig::{hermitian_eig, hermitian_eigvals, EigDecomposition, DEFAULT_DENSE_CAP};
pub use qr::{householder_qr, QrFactors};
pub use svd::{jacobi_svd_cond, SvdCond};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::eye(n, n)
    }

    /// Rectangular identity: ones on the main diagonal.
    pub fn eye(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Wraps a column-major buffer.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return dim_err(
                "from_col_major",
                format!("{} entries for a {rows}x{cols} matrix", data.len()),
            );
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices. Panics on ragged input; meant for
    /// literals in tests and examples.
    pub fn from_rows(rows: &[&[T]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Matrix of independent standard normal entries.
    pub fn random_normal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| T::sample_normal(rng)).collect();
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        let r = self.rows;
        &mut self.data[j * r..(j + 1) * r]
    }

    /// Mutable access to two distinct columns.
    pub fn col_pair_mut(&mut self, a: usize, b: usize) -> (&mut [T], &mut [T]) {
        assert!(a < b && b < self.cols);
        let r = self.rows;
        let (lo, hi) = self.data.split_at_mut(b * r);
        (&mut lo[a * r..(a + 1) * r], &mut hi[..r])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Copy of a contiguous range of columns.
    pub fn columns(&self, range: Range<usize>) -> Self {
        assert!(range.start <= range.end && range.end <= self.cols);
        Self {
            rows: self.rows,
            cols: range.len(),
            data: self.data[range.start * self.rows..range.end * self.rows].to_vec(),
        }
    }

    /// Overwrites columns `start..start + src.cols()` with `src`.
    pub fn set_columns(&mut self, start: usize, src: &Self) -> Result<()> {
        if src.rows != self.rows || start + src.cols > self.cols {
            return dim_err(
                "set_columns",
                format!(
                    "{}x{} block at column {start} of a {}x{} matrix",
                    src.rows, src.cols, self.rows, self.cols
                ),
            );
        }
        let r = self.rows;
        self.data[start * r..(start + src.cols) * r].copy_from_slice(&src.data);
        Ok(())
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return dim_err(
                "hcat",
                format!("{} rows against {} rows", self.rows, other.rows),
            );
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(Self {
            rows: self.rows,
            cols: self.cols + other.cols,
            data,
        })
    }

    /// Copy with columns taken in the given order.
    pub fn select_columns(&self, order: &[usize]) -> Self {
        let mut data = Vec::with_capacity(order.len() * self.rows);
        for &j in order {
            data.extend_from_slice(self.col(j));
        }
        Self {
            rows: self.rows,
            cols: order.len(),
            data,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    /// `self - other`, entrywise.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with("sub", other, |a, b| a - b)
    }

    /// `self + other`, entrywise.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with("add", other, |a, b| a + b)
    }

    fn zip_with(&self, op: &'static str, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape() != other.shape() {
            return dim_err(
                op,
                format!("{:?} against {:?}", self.shape(), other.shape()),
            );
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for j in 0..self.cols {
            for i in 0..=j {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).abs());
            }
        }
        worst
    }

    /// `‖selfᴴ·self − I‖_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        let g = gram(self).expect("gram of any matrix is defined");
        let mut s = 0.0;
        for j in 0..g.cols {
            for i in 0..g.rows {
                let d = if i == j { g[(i, j)] - T::one() } else { g[(i, j)] };
                s += d.abs_sqr();
            }
        }
        s.sqrt()
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

/// Euclidean norm with scaling against overflow.
pub fn norm2<T: Scalar>(x: &[T]) -> f64 {
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let inv = 1.0 / scale;
    let s: f64 = x.iter().map(|v| v.scale(inv).abs_sqr()).sum();
    scale * s.sqrt()
}

/// `xᴴy` with a fixed four-way split of the summation.
pub fn dotc<T: Scalar>(x: &[T], y: &[T]) -> T {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = [T::zero(); 4];
    let chunks = x.len() / 4;
    for c in 0..chunks {
        let b = 4 * c;
        acc[0] += x[b].conj() * y[b];
        acc[1] += x[b + 1].conj() * y[b + 1];
        acc[2] += x[b + 2].conj() * y[b + 2];
        acc[3] += x[b + 3].conj() * y[b + 3];
    }
    let mut tail = T::zero();
    for i in 4 * chunks..x.len() {
        tail += x[i].conj() * y[i];
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

/// `y += a·x`.
#[inline]
pub fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

const ROW_CHUNK: usize = 512;

/// Accumulates `out[:, j] += Σ_k a[:, k]·b[k, j]`.
///
/// Output columns are processed in groups of four and rows in cache-sized
/// chunks; `k` is unrolled by four with left-to-right evaluation, so each
/// entry is summed in plain increasing-`k` order in every code path.
fn matmul_acc<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>, out: &mut DenseMatrix<T>) {
    let m = a.rows;
    let kk = a.cols;
    let n = b.cols;
    let mut j = 0;
    while j + 4 <= n {
        let (o0, rest) = out.data[j * m..(j + 4) * m].split_at_mut(m);
        let (o1, rest) = rest.split_at_mut(m);
        let (o2, o3) = rest.split_at_mut(m);
        let bj = [b.col(j), b.col(j + 1), b.col(j + 2), b.col(j + 3)];
        let mut r0 = 0;
        while r0 < m {
            let r1 = (r0 + ROW_CHUNK).min(m);
            let (c0, c1, c2, c3) = (
                &mut o0[r0..r1],
                &mut o1[r0..r1],
                &mut o2[r0..r1],
                &mut o3[r0..r1],
            );
            let mut k = 0;
            while k + 4 <= kk {
                let a0 = &a.col(k)[r0..r1];
                let a1 = &a.col(k + 1)[r0..r1];
                let a2 = &a.col(k + 2)[r0..r1];
                let a3 = &a.col(k + 3)[r0..r1];
                let w: [[T; 4]; 4] =
                    std::array::from_fn(|q| std::array::from_fn(|p| bj[q][k + p]));
                for i in 0..r1 - r0 {
                    let (x0, x1, x2, x3) = (a0[i], a1[i], a2[i], a3[i]);
                    c0[i] = c0[i] + x0 * w[0][0] + x1 * w[0][1] + x2 * w[0][2] + x3 * w[0][3];
                    c1[i] = c1[i] + x0 * w[1][0] + x1 * w[1][1] + x2 * w[1][2] + x3 * w[1][3];
                    c2[i] = c2[i] + x0 * w[2][0] + x1 * w[2][1] + x2 * w[2][2] + x3 * w[2][3];
                    c3[i] = c3[i] + x0 * w[3][0] + x1 * w[3][1] + x2 * w[3][2] + x3 * w[3][3];
                }
                k += 4;
            }
            while k < kk {
                let ak = &a.col(k)[r0..r1];
                let w = [bj[0][k], bj[1][k], bj[2][k], bj[3][k]];
                for i in 0..r1 - r0 {
                    let x = ak[i];
                    c0[i] = c0[i] + x * w[0];
                    c1[i] = c1[i] + x * w[1];
                    c2[i] = c2[i] + x * w[2];
                    c3[i] = c3[i] + x * w[3];
                }
                k += 1;
            }
            r0 = r1;
        }
        j += 4;
    }
    while j < n {
        let bj = b.col(j);
        let o = &mut out.data[j * m..(j + 1) * m];
        let mut r0 = 0;
        while r0 < m {
            let r1 = (r0 + ROW_CHUNK).min(m);
            let c = &mut o[r0..r1];
            let mut k = 0;
            while k + 4 <= kk {
                let a0 = &a.col(k)[r0..r1];
                let a1 = &a.col(k + 1)[r0..r1];
                let a2 = &a.col(k + 2)[r0..r1];
                let a3 = &a.col(k + 3)[r0..r1];
                let w = [bj[k], bj[k + 1], bj[k + 2], bj[k + 3]];
                for i in 0..r1 - r0 {
                    c[i] = c[i] + a0[i] * w[0] + a1[i] * w[1] + a2[i] * w[2] + a3[i] * w[3];
                }
                k += 4;
            }
            while k < kk {
                let ak = &a.col(k)[r0..r1];
                let w = bj[k];
                for i in 0..r1 - r0 {
                    c[i] = c[i] + ak[i] * w;
                }
                k += 1;
            }
            r0 = r1;
        }
        j += 1;
    }
}

/// `A·B`.
pub fn matmul<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if a.cols != b.rows {
        return dim_err(
            "matmul",
            format!("{:?} times {:?}", a.shape(), b.shape()),
        );
    }
    let mut out = DenseMatrix::zeros(a.rows, b.cols);
    matmul_acc(a, b, &mut out);
    Ok(out)
}

/// `alpha·A·B + beta·C`.
pub fn gemm<T: Scalar>(
    alpha: T,
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    beta: T,
    c: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if a.cols != b.rows || c.rows != a.rows || c.cols != b.cols {
        return dim_err(
            "gemm",
            format!(
                "A {:?}, B {:?}, C {:?}",
                a.shape(),
                b.shape(),
                c.shape()
            ),
        );
    }
    let mut out = DenseMatrix::zeros(c.rows, c.cols);
    if alpha != T::zero() {
        matmul_acc(a, b, &mut out);
        if alpha != T::one() {
            out.data.iter_mut().for_each(|x| *x = alpha * *x);
        }
    }
    if beta != T::zero() {
        for (o, &ci) in out.data.iter_mut().zip(&c.data) {
            *o += beta * ci;
        }
    }
    Ok(out)
}

/// `Aᴴ·B` as a table of column dot products.
pub fn adjoint_mul<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if a.rows != b.rows {
        return dim_err(
            "adjoint_mul",
            format!("{:?}ᴴ times {:?}", a.shape(), b.shape()),
        );
    }
    Ok(DenseMatrix::from_fn(a.cols, b.cols, |i, j| {
        dotc(a.col(i), b.col(j))
    }))
}

/// `Xᴴ·X`, computed on the upper triangle and mirrored so the stored
/// matrix is exactly Hermitian with a real diagonal.
pub fn gram<T: Scalar>(x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if x.cols == 0 {
        return contract_err("gram", "input has no columns");
    }
    let n = x.cols;
    let mut g = DenseMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let v = dotc(x.col(i), x.col(j));
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
        let d = x.col(j).iter().map(|v| v.abs_sqr()).sum::<f64>();
        g[(j, j)] = T::from_real(d);
    }
    Ok(g)
}

/// Forces exact Hermitian symmetry by averaging mirrored entries.
pub fn symmetrize<T: Scalar>(h: &mut DenseMatrix<T>) {
    let n = h.rows.min(h.cols);
    for j in 0..n {
        for i in 0..j {
            let v = (h[(i, j)] + h[(j, i)].conj()).scale(0.5);
            h[(i, j)] = v;
            h[(j, i)] = v.conj();
        }
        h[(j, j)] = T::from_real(h[(j, j)].re());
    }
}
