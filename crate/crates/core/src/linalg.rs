//! Dense linear algebra used by the geometry and recovery kernels.
//!
//! Matrices here are small (tens of rows), so the implementations favor
//! robustness and determinism over asymptotics: cyclic Jacobi rotations for
//! symmetric eigenproblems, unblocked Cholesky and partially pivoted LU, and
//! scaled Taylor series for the general matrix exponential.

use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        Mat::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn diag(entries: &[T]) -> Self {
        let n = entries.len();
        Mat::from_fn(n, n, |i, j| if i == j { entries[i] } else { T::zero() })
    }

    pub fn scaled_identity(n: usize, s: T) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = s;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[T]) {
        for i in 0..self.rows {
            self[(i, j)] = col[i];
        }
    }

    pub fn transpose(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + other[(i, j)])
    }

    pub fn sub(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - other[(i, j)])
    }

    pub fn scale(&self, s: T) -> Mat<T> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * s)
    }

    /// (A + Aᵀ)/2.
    pub fn symmetrize(&self) -> Mat<T> {
        assert_eq!(self.rows, self.cols);
        let half = c::<T>(0.5);
        Mat::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)]) * half)
    }

    /// max_{ij} |A_ij − A_ji|.
    pub fn asymmetry(&self) -> T {
        assert_eq!(self.rows, self.cols);
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let d = (self[(i, j)] - self[(j, i)]).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// max_{ij} |A_ij|.
    pub fn max_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| if v.abs() > m { v.abs() } else { m })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Trace of a square matrix.
    pub fn trace(&self) -> T {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// AᵀBA for square B; the usual congruence transform.
    pub fn congruence(&self, b: &Mat<T>) -> Mat<T> {
        self.transpose().matmul(&b.matmul(self))
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn norm_inf<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &v| if v.abs() > m { v.abs() } else { m })
}

// ---------------------------------------------------------------------------
// Cholesky
// ---------------------------------------------------------------------------

/// Lower Cholesky factor of an SPD matrix. Fails if a pivot is not positive.
pub fn cholesky<T: Scalar>(a: &Mat<T>) -> Result<Mat<T>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d = d - l[(j, k)] * l[(j, k)];
        }
        if d <= T::zero() || !d.is_finite() {
            return Err(Error::Linalg(format!(
                "cholesky pivot {} is not positive (got {:?})",
                j, d
            )));
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(l)
}

/// Solves L x = b with L lower triangular.
pub fn solve_lower<T: Scalar>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = l.rows();
    let mut x = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves Lᵀ x = b with L lower triangular.
pub fn solve_lower_transpose<T: Scalar>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = l.rows();
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s = s - l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// log det of an SPD matrix via Cholesky.
pub fn log_det_spd<T: Scalar>(a: &Mat<T>) -> Result<T> {
    let l = cholesky(a)?;
    let two = c::<T>(2.0);
    Ok((0..a.rows()).map(|i| l[(i, i)].ln()).sum::<T>() * two)
}

// ---------------------------------------------------------------------------
// LU with partial pivoting
// ---------------------------------------------------------------------------

/// Packed LU factorization with row pivots.
pub struct Lu<T> {
    lu: Mat<T>,
    piv: Vec<usize>,
    sign: i32,
}

pub fn lu_factor<T: Scalar>(a: &Mat<T>) -> Result<Lu<T>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut lu = a.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    let mut sign = 1;
    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].abs();
        for i in (k + 1)..n {
            if lu[(i, k)].abs() > best {
                best = lu[(i, k)].abs();
                p = i;
            }
        }
        if best == T::zero() || !best.is_finite() {
            return Err(Error::Linalg(format!("singular matrix at pivot {}", k)));
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            piv.swap(k, p);
            sign = -sign;
        }
        let pivot = lu[(k, k)];
        for i in (k + 1)..n {
            let m = lu[(i, k)] / pivot;
            lu[(i, k)] = m;
            for j in (k + 1)..n {
                let v = lu[(i, j)] - m * lu[(k, j)];
                lu[(i, j)] = v;
            }
        }
    }
    Ok(Lu { lu, piv, sign })
}

impl<T: Scalar> Lu<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows();
        let mut x: Vec<T> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for k in 0..i {
                let v = x[i] - self.lu[(i, k)] * x[k];
                x[i] = v;
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let v = x[i] - self.lu[(i, k)] * x[k];
                x[i] = v;
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        x
    }

    pub fn det(&self) -> T {
        let mut d = if self.sign > 0 { T::one() } else { -T::one() };
        for i in 0..self.lu.rows() {
            d = d * self.lu[(i, i)];
        }
        d
    }

    /// log|det| together with the sign of the determinant.
    pub fn log_abs_det(&self) -> (T, i32) {
        let mut s = self.sign;
        let mut acc = T::zero();
        for i in 0..self.lu.rows() {
            let d = self.lu[(i, i)];
            if d < T::zero() {
                s = -s;
            }
            acc = acc + d.abs().ln();
        }
        (acc, s)
    }
}

/// Matrix inverse via LU solves against the identity columns.
pub fn inverse<T: Scalar>(a: &Mat<T>) -> Result<Mat<T>> {
    let n = a.rows();
    let lu = lu_factor(a)?;
    let mut inv = Mat::zeros(n, n);
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e[j] = T::one();
        let col = lu.solve(&e);
        inv.set_column(j, &col);
        e[j] = T::zero();
    }
    Ok(inv)
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition (cyclic Jacobi)
// ---------------------------------------------------------------------------

/// Eigendecomposition A = V diag(w) Vᵀ of a symmetric matrix, eigenvalues
/// ascending, eigenvectors in the columns of V.
pub fn sym_eigen<T: Scalar>(a: &Mat<T>) -> Result<(Vec<T>, Mat<T>)> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    if !a.is_finite() {
        return Err(Error::Linalg("non-finite entries in eigensolver input".into()));
    }
    let mut m = a.symmetrize();
    let mut v = Mat::identity(n);
    if n <= 1 {
        let w = if n == 1 { vec![m[(0, 0)]] } else { vec![] };
        return Ok((w, v));
    }
    let eps = c::<T>(1e-14);
    let scale = m.max_norm().max(T::one());
    let tol = eps * scale;
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                if m[(p, q)].abs() > off {
                    off = m[(p, q)].abs();
                }
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol * c(1e-2) {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (c::<T>(2.0) * apq);
                let t = {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let cos = T::one() / (t * t + T::one()).sqrt();
                let sin = t * cos;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = cos * mkp - sin * mkq;
                    m[(k, q)] = sin * mkp + cos * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = cos * mpk - sin * mqk;
                    m[(q, k)] = sin * mpk + cos * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = cos * vkp - sin * vkq;
                    v[(k, q)] = sin * vkp + cos * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let w: Vec<T> = (0..n).map(|i| m[(i, i)]).collect();
    idx.sort_by(|&i, &j| w[i].partial_cmp(&w[j]).expect("finite eigenvalues"));
    let sorted_w: Vec<T> = idx.iter().map(|&i| w[i]).collect();
    let mut sorted_v = Mat::zeros(n, n);
    for (new, &old) in idx.iter().enumerate() {
        let col = v.column(old);
        sorted_v.set_column(new, &col);
    }
    Ok((sorted_w, sorted_v))
}

/// Applies `f` to the eigenvalues of a symmetric matrix and reassembles.
pub fn sym_map<T: Scalar>(a: &Mat<T>, f: impl Fn(T) -> Result<T>) -> Result<Mat<T>> {
    let (w, v) = sym_eigen(a)?;
    let n = a.rows();
    let mut fw = Vec::with_capacity(n);
    for &wi in &w {
        fw.push(f(wi)?);
    }
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = T::zero();
            for k in 0..n {
                s = s + v[(i, k)] * fw[k] * v[(j, k)];
            }
            out[(i, j)] = s;
        }
    }
    Ok(out.symmetrize())
}

/// expm of a symmetric matrix via eigendecomposition.
pub fn sym_expm<T: Scalar>(a: &Mat<T>) -> Result<Mat<T>> {
    sym_map(a, |w| Ok(w.exp()))
}

/// logm of an SPD matrix via eigendecomposition; eigenvalues are floored
/// at a tiny positive guard before the log.
pub fn spd_logm<T: Scalar>(a: &Mat<T>) -> Result<Mat<T>> {
    let floor = c::<T>(1e-300);
    sym_map(a, |w| {
        if w <= T::zero() {
            return Err(Error::Linalg(format!("logm of non-SPD matrix (eigenvalue {:?})", w)));
        }
        Ok(w.max(floor).ln())
    })
}

/// A^{-1/2} for SPD A via eigendecomposition.
pub fn spd_inv_sqrt<T: Scalar>(a: &Mat<T>) -> Result<Mat<T>> {
    let guard = c::<T>(1e-12);
    let (w, _) = sym_eigen(a)?;
    let wmax = w.last().copied().unwrap_or(T::one());
    sym_map(a, |wi| {
        if wi <= guard * wmax.max(T::one()) {
            return Err(Error::Linalg(format!(
                "inverse square root of near-singular matrix (eigenvalue {:?})",
                wi
            )));
        }
        Ok(T::one() / wi.sqrt())
    })
}

/// A^{1/2} for SPD A.
pub fn spd_sqrt<T: Scalar>(a: &Mat<T>) -> Result<Mat<T>> {
    sym_map(a, |w| {
        if w < T::zero() {
            return Err(Error::Linalg(format!("square root of indefinite matrix ({:?})", w)));
        }
        Ok(w.sqrt())
    })
}

// ---------------------------------------------------------------------------
// General matrix exponential
// ---------------------------------------------------------------------------

/// expm of a general square matrix by scaling-and-squaring with a Taylor
/// series; the scaled norm is kept below 1/4 so 20 terms are ample.
pub fn expm<T: Scalar>(a: &Mat<T>) -> Mat<T> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    // 1-norm for the scaling decision.
    let mut anorm = T::zero();
    for j in 0..n {
        let colsum: T = (0..n).map(|i| a[(i, j)].abs()).sum();
        if colsum > anorm {
            anorm = colsum;
        }
    }
    let quarter = c::<T>(0.25);
    let mut squarings = 0u32;
    let mut scaled = a.clone();
    while anorm > quarter && squarings < 64 {
        anorm = anorm * c(0.5);
        squarings += 1;
    }
    if squarings > 0 {
        let s = T::one() / c::<T>(f64::from(1u32 << squarings.min(31)));
        // for very large squarings, divide repeatedly to stay exact
        if squarings <= 31 {
            scaled = scaled.scale(s);
        } else {
            for _ in 0..squarings {
                scaled = scaled.scale(c(0.5));
            }
        }
    }
    let mut result = Mat::identity(n);
    let mut term = Mat::identity(n);
    for k in 1..=20 {
        term = term.matmul(&scaled).scale(T::one() / c(k as f64));
        result = result.add(&term);
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    result
}

/// Fréchet derivative of expm at `a` in direction `e`, via the block trick:
/// expm([[A, E], [0, A]]) has the derivative in its upper-right block.
pub fn expm_frechet<T: Scalar>(a: &Mat<T>, e: &Mat<T>) -> Mat<T> {
    let n = a.rows();
    let mut block = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            block[(i, j)] = a[(i, j)];
            block[(i, j + n)] = e[(i, j)];
            block[(i + n, j + n)] = a[(i, j)];
        }
    }
    let big = expm(&block);
    Mat::from_fn(n, n, |i, j| big[(i, j + n)])
}
