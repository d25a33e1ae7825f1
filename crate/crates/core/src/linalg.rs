//! Small dense row-major matrices, a cyclic Jacobi eigensolver for symmetric
//! matrices and the PSD matrix square root built on it.
//!
//! Everything here is sized for embedding covariances (d up to a few hundred)
//! and toy attention shapes; no blocking or BLAS.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
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

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[T]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let lhs_row = self.row(i);
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in lhs_row.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o = *o + a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest `|a_ij - a_ji|`; zero for a symmetric matrix.
    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        let half = lit::<T>(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)]) * half
        })
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Eigen-decomposition `A = U diag(values) Uᵀ`; `vectors` holds eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotation eigensolver.
///
/// Input must be square; it is symmetrized before iterating, so callers
/// are responsible for rejecting matrices that are too far from symmetric.
pub fn symmetric_eigen<T: Scalar>(a: &Matrix<T>) -> Result<SymmetricEigen<T>> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("eigendecomposition input".into()));
    }
    let n = a.rows();
    let mut m = a.symmetrized();
    let mut v = Matrix::<T>::identity(n);
    let scale = m.frobenius_norm();
    if scale == T::zero() {
        return Ok(SymmetricEigen {
            values: vec![T::zero(); n],
            vectors: v,
        });
    }
    let target = T::epsilon() * scale * lit(0.1);
    let half = lit::<T>(0.5);

    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&m);
        if off <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (apq + apq);
                let t = if theta.abs() > lit(1e150) {
                    half / theta
                } else {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s);
            }
        }
    }

    let values = (0..n).map(|i| m[(i, i)]).collect();
    Ok(SymmetricEigen { values, vectors: v })
}

fn off_diagonal_norm<T: Scalar>(m: &Matrix<T>) -> T {
    let n = m.rows();
    let mut acc = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            acc = acc + m[(i, j)] * m[(i, j)];
        }
    }
    (acc + acc).sqrt()
}

/// Applies `Jᵀ M J` with the Jacobi rotation in the (p, q) plane and accumulates `V J`.
fn rotate<T: Scalar>(m: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize, c: T, s: T) {
    let n = m.rows();
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
    m[(p, q)] = T::zero();
    m[(q, p)] = T::zero();
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Reassembles `U f(Λ) Uᵀ` from a decomposition.
pub fn reconstruct<T: Scalar>(eig: &SymmetricEigen<T>, f: impl Fn(T) -> T) -> Matrix<T> {
    let n = eig.values.len();
    let fvals: Vec<T> = eig.values.iter().map(|&l| f(l)).collect();
    let u = &eig.vectors;
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut acc = T::zero();
            for (k, &fk) in fvals.iter().enumerate() {
                acc = acc + u[(i, k)] * fk * u[(j, k)];
            }
            out[(i, j)] = acc;
            out[(j, i)] = acc;
        }
    }
    out
}

/// Principal square root of a symmetric positive semi-definite matrix.
///
/// Small negative eigenvalues (rounding noise, rank-deficient sample
/// covariances) are clamped to zero. Asymmetry or negative eigenvalues
/// beyond `T::psd_tolerance()` relative to the matrix scale are rejected.
pub fn sqrtm_psd<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "square root needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("sqrtm input".into()));
    }
    let tol = T::psd_tolerance();
    let scale = a.max_abs();
    let asym = a.max_asymmetry();
    if asym > tol * scale {
        return Err(Error::NotPsd(format!(
            "asymmetry {asym} exceeds tolerance {}",
            tol * scale
        )));
    }
    let eig = symmetric_eigen(a)?;
    let largest = eig
        .values
        .iter()
        .fold(T::zero(), |acc, &l| acc.max(l.abs()));
    let floor = -(tol * largest.max(T::one()));
    if let Some(&worst) = eig.values.iter().find(|&&l| l < floor) {
        return Err(Error::NotPsd(format!("eigenvalue {worst} below {floor}")));
    }
    Ok(reconstruct(&eig, |l| l.max(T::zero()).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_err(a: &Matrix<f64>, b: &Matrix<f64>) -> f64 {
        a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm()
    }

    #[test]
    fn identity_root_is_identity() {
        let i = Matrix::<f64>::identity(4);
        assert_eq!(sqrtm_psd(&i).unwrap(), i);
    }

    #[test]
    fn diagonal_root() {
        let r = sqrtm_psd(&Matrix::<f64>::from_diagonal(&[4.0, 9.0])).unwrap();
        assert!((r[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((r[(1, 1)] - 3.0).abs() < 1e-15);
        assert_eq!(r[(0, 1)], 0.0);
    }

    #[test]
    fn eigen_of_known_2x2() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let a = Matrix::<f64>::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let mut vals = symmetric_eigen(&a).unwrap().values;
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn reconstructs_dense_psd() {
        let c = Matrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.7 + (i as f64) * 0.1);
        let b = c.transpose().matmul(&c).unwrap();
        let s = sqrtm_psd(&b).unwrap();
        assert!(s.max_asymmetry() == 0.0);
        assert!(rel_err(&s.matmul(&s).unwrap(), &b) < 1e-12);
    }

    #[test]
    fn rejects_asymmetric() {
        let a = Matrix::from_rows(&[[1.0, 0.5], [0.0, 1.0]]).unwrap();
        assert!(matches!(sqrtm_psd(&a), Err(Error::NotPsd(_))));
    }

    #[test]
    fn rejects_indefinite() {
        let a = Matrix::from_diagonal(&[1.0, -0.5]);
        assert!(matches!(sqrtm_psd(&a), Err(Error::NotPsd(_))));
    }

    #[test]
    fn clamps_rounding_negatives() {
        let a = Matrix::from_diagonal(&[1.0, -1e-14]);
        let r = sqrtm_psd(&a).unwrap();
        assert_eq!(r[(1, 1)], 0.0);
    }

    #[test]
    fn rejects_nan() {
        let a = Matrix::from_rows(&[[f64::NAN, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(sqrtm_psd(&a), Err(Error::NonFinite(_))));
    }

    #[test]
    fn works_in_single_precision() {
        let a = Matrix::<f32>::from_diagonal(&[16.0, 0.25]);
        let r = sqrtm_psd(&a).unwrap();
        assert!((r[(0, 0)] - 4.0).abs() < 1e-6);
        assert!((r[(1, 1)] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn matmul_shape_checked() {
        let a = Matrix::<f64>::zeros(2, 3);
        assert!(a.matmul(&a).is_err());
    }
}
