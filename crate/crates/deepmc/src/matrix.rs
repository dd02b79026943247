//! Dense row-major matrices over `f64`.
//!
//! This is the numeric substrate for the whole crate: a flat `Vec<f64>` with
//! explicit `rows`/`cols`, plus the handful of dense operations the training
//! loops actually need. Matrix products go through `matrixmultiply::dgemm`,
//! which is substantially faster than a naive triple loop on a single core;
//! transposed operands are expressed with stride swaps so no transpose is
//! ever materialized for a product.

/// Dense row-major matrix.
///
/// Entry `(i, j)` lives at `data[i * cols + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// All-zeros matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Matrix with every entry set to `value`.
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Identity matrix of order `n`.
    pub fn eye(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from a flat row-major buffer.
    ///
    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "buffer length {} does not match shape {}x{}",
            data.len(),
            rows,
            cols
        );
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from a slice of equal-length rows.
    ///
    /// Panics on ragged input or an empty row set.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty(), "cannot build a matrix from zero rows");
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "row {} has length {}, expected {}", i, r.len(), cols);
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// Number of rows.
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Shape as `(rows, cols)`.
    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Total number of entries.
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// True when the matrix has no entries.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Entry at `(i, j)`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        self.data[i * self.cols + j]
    }

    /// Sets the entry at `(i, j)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        self.data[i * self.cols + j] = value;
    }

    /// Flat row-major view of the entries.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Flat mutable row-major view of the entries.
    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Row `i` as a slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Row `i` as a mutable slice.
    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Materialized transpose.
    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Applies `f` to every entry, producing a new matrix.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Applies `f` to every entry in place.
    pub fn map_inplace(&mut self, mut f: impl FnMut(f64) -> f64) {
        for x in &mut self.data {
            *x = f(*x);
        }
    }

    /// Entrywise sum `self + other`.
    pub fn add(&self, other: &Matrix) -> Matrix {
        self.zip(other, |a, b| a + b)
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.zip(other, |a, b| a - b)
    }

    /// Entrywise (Hadamard) product.
    pub fn hadamard(&self, other: &Matrix) -> Matrix {
        self.zip(other, |a, b| a * b)
    }

    /// Scalar multiple `s * self`.
    pub fn scale(&self, s: f64) -> Matrix {
        self.map(|x| s * x)
    }

    /// In-place `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Matrix) {
        assert_eq!(self.shape(), other.shape(), "axpy shape mismatch");
        for (x, &y) in self.data.iter_mut().zip(&other.data) {
            *x += alpha * y;
        }
    }

    fn zip(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!(
            self.shape(),
            other.shape(),
            "entrywise op shape mismatch: {:?} vs {:?}",
            self.shape(),
            other.shape()
        );
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Sum of all entries.
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Sum of absolute values (entrywise ℓ1 norm).
    pub fn sum_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).sum()
    }

    /// Largest absolute entry (entrywise ℓ∞ norm); 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    /// Largest entry; `-inf` for an empty matrix.
    pub fn max(&self) -> f64 {
        self.data.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x))
    }

    /// Squared Frobenius norm.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        let mut c = Matrix::zeros(self.rows, other.cols);
        gemm(1.0, self, false, other, false, 0.0, &mut c);
        c
    }

    /// Matrix product `selfᵀ * other` without materializing the transpose.
    pub fn matmul_at_b(&self, other: &Matrix) -> Matrix {
        let mut c = Matrix::zeros(self.cols, other.cols);
        gemm(1.0, self, true, other, false, 0.0, &mut c);
        c
    }

    /// Matrix product `self * otherᵀ` without materializing the transpose.
    pub fn matmul_a_bt(&self, other: &Matrix) -> Matrix {
        let mut c = Matrix::zeros(self.rows, other.rows);
        gemm(1.0, self, false, other, true, 0.0, &mut c);
        c
    }
}

/// General matrix multiply: `c = alpha * op(a) * op(b) + beta * c`.
///
/// `ta` / `tb` select the transposed view of the corresponding operand; the
/// transpose is expressed purely through strides, so it costs nothing.
///
/// Panics when the effective shapes do not chain or do not match `c`.
pub fn gemm(alpha: f64, a: &Matrix, ta: bool, b: &Matrix, tb: bool, beta: f64, c: &mut Matrix) {
    // Effective dims and (row, col) strides of each operand view.
    let (am, ak, ars, acs) = if ta {
        (a.cols, a.rows, 1isize, a.cols as isize)
    } else {
        (a.rows, a.cols, a.cols as isize, 1isize)
    };
    let (bk, bn, brs, bcs) = if tb {
        (b.cols, b.rows, 1isize, b.cols as isize)
    } else {
        (b.rows, b.cols, b.cols as isize, 1isize)
    };
    assert_eq!(ak, bk, "gemm inner dimensions do not chain: {} vs {}", ak, bk);
    assert_eq!(
        (c.rows, c.cols),
        (am, bn),
        "gemm output shape mismatch: have {:?}, need ({}, {})",
        (c.rows, c.cols),
        am,
        bn
    );
    if am == 0 || bn == 0 {
        return;
    }
    if ak == 0 {
        // Inner dimension zero: the product contributes nothing.
        for x in &mut c.data {
            *x *= beta;
        }
        return;
    }
    let ccs = 1isize;
    let crs = c.cols as isize;
    unsafe {
        matrixmultiply::dgemm(
            am,
            ak,
            bn,
            alpha,
            a.data.as_ptr(),
            ars,
            acs,
            b.data.as_ptr(),
            brs,
            bcs,
            beta,
            c.data.as_mut_ptr(),
            crs,
            ccs,
        );
    }
}

// ─── singular value decomposition ───

/// Thin singular value decomposition `M = U · diag(s) · Vᵀ`.
///
/// With `M` of shape `(m, n)` and `k = min(m, n)`: `u` is `(m, k)`, `s` holds
/// the `k` singular values in descending order, and `vt` is `(k, n)`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub vt: Matrix,
}

impl Svd {
    /// Reassembles `U · diag(s) · Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let k = self.s.len();
        // Scale the rows of Vᵀ by the singular values, then multiply.
        let mut svt = self.vt.clone();
        for (i, &sigma) in self.s.iter().enumerate().take(k) {
            for x in svt.row_mut(i) {
                *x *= sigma;
            }
        }
        self.u.matmul(&svt)
    }
}

/// Thin SVD with deterministic output conventions.
///
/// Beyond what the backend guarantees, this wrapper enforces two properties
/// the rest of the crate relies on:
///
/// * singular values are sorted in descending order (ties keep backend
///   order), with `u` / `vt` permuted to match;
/// * each column of `u` is sign-normalized so that its largest-magnitude
///   entry is nonnegative, with the paired row of `vt` flipped in tandem.
///   This removes the per-pair sign ambiguity, making outputs reproducible.
pub fn svd(m: &Matrix) -> crate::Result<Svd> {
    let dm = nalgebra::DMatrix::from_row_slice(m.rows, m.cols, &m.data);
    let f = dm
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| crate::Error::numerical("SVD iteration failed to converge"))?;
    let nu = f.u.expect("u was requested");
    let nvt = f.v_t.expect("v_t was requested");
    let k = f.singular_values.len();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        f.singular_values[b]
            .partial_cmp(&f.singular_values[a])
            .expect("singular values are finite")
    });

    let mut u = Matrix::zeros(m.rows, k);
    let mut vt = Matrix::zeros(k, m.cols);
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        s.push(f.singular_values[src]);
        for i in 0..m.rows {
            u.set(i, dst, nu[(i, src)]);
        }
        for j in 0..m.cols {
            vt.set(dst, j, nvt[(src, j)]);
        }
    }

    // Sign normalization: pivot on the largest-magnitude entry of each left
    // singular vector.
    for j in 0..k {
        let mut pivot = 0.0f64;
        for i in 0..m.rows {
            let x = u.get(i, j);
            if x.abs() > pivot.abs() {
                pivot = x;
            }
        }
        if pivot < 0.0 {
            for i in 0..m.rows {
                let x = u.get(i, j);
                u.set(i, j, -x);
            }
            for c in 0..m.cols {
                let x = vt.get(j, c);
                vt.set(j, c, -x);
            }
        }
    }

    Ok(Svd { u, s, vt })
}

// ─── tests ───
