//! Gaussian fits of embedding sets and the Fréchet distance between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sqrtm_psd, Matrix};
use crate::scalar::{lit, Scalar};
use crate::semantic::EmbeddingMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSummary<T> {
    pub mean: Vec<T>,
    pub covariance: Matrix<T>,
    pub n: usize,
}

impl<T: Scalar> GaussianSummary<T> {
    pub fn new(mean: Vec<T>, covariance: Matrix<T>, n: usize) -> Result<Self> {
        if covariance.rows() != mean.len() || !covariance.is_square() {
            return Err(Error::Shape(format!(
                "mean of length {} with {}x{} covariance",
                mean.len(),
                covariance.rows(),
                covariance.cols()
            )));
        }
        Ok(Self { mean, covariance, n })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Column mean and unbiased (n−1) covariance, symmetrized.
pub fn fit_gaussian<T: Scalar>(e: &EmbeddingMatrix<T>) -> Result<GaussianSummary<T>> {
    let n = e.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "a Gaussian fit needs at least 2 rows, got {n}"
        )));
    }
    let d = e.dim();
    let nt = T::from_usize(n).expect("row count fits the scalar");
    let mut mean = vec![T::zero(); d];
    for row in e.vectors().row_iter() {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m = *m + x;
        }
    }
    for m in &mut mean {
        *m = *m / nt;
    }

    let mut cov = Matrix::<T>::zeros(d, d);
    let mut centered = vec![T::zero(); d];
    for row in e.vectors().row_iter() {
        for ((c, &x), &m) in centered.iter_mut().zip(row).zip(&mean) {
            *c = x - m;
        }
        for a in 0..d {
            let ca = centered[a];
            if ca == T::zero() {
                continue;
            }
            let out = cov.row_mut(a);
            for b in a..d {
                out[b] = out[b] + ca * centered[b];
            }
        }
    }
    let denom = nt - T::one();
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    GaussianSummary::new(mean, cov.symmetrized(), n)
}

/// `‖μ_r − μ_g‖² + Tr Σ_r + Tr Σ_g − 2 Tr (S Σ_g S)^{1/2}` with `S = Σ_r^{1/2}`.
///
/// `S Σ_g S` is similar to `Σ_r Σ_g`, so the trace of its square root equals
/// `Tr (Σ_r Σ_g)^{1/2}` while staying symmetric PSD.
pub fn frechet_distance<T: Scalar>(r: &GaussianSummary<T>, g: &GaussianSummary<T>) -> Result<T> {
    if r.dim() != g.dim() {
        return Err(Error::Shape(format!(
            "Gaussians of dimension {} and {}",
            r.dim(),
            g.dim()
        )));
    }
    let mean_term: T = r
        .mean
        .iter()
        .zip(&g.mean)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    let s = sqrtm_psd(&r.covariance)?;
    let inner = s.matmul(&g.covariance)?.matmul(&s)?.symmetrized();
    let cross = sqrtm_psd(&inner)?.trace();
    let fd = mean_term + r.covariance.trace() + g.covariance.trace() - lit::<T>(2.0) * cross;
    if !fd.is_finite() {
        return Err(Error::NonFinite("frechet distance".into()));
    }
    Ok(fd.max(T::zero()))
}

/// Fits both sets (optionally after L2 normalization) and returns their distance.
pub fn embedding_frechet_distance<T: Scalar>(
    reference: &EmbeddingMatrix<T>,
    generated: &EmbeddingMatrix<T>,
    normalize: bool,
) -> Result<T> {
    let (r, g) = if normalize {
        (reference.l2_normalized()?, generated.l2_normalized()?)
    } else {
        (reference.clone(), generated.clone())
    };
    frechet_distance(&fit_gaussian(&r)?, &fit_gaussian(&g)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(rows: &[Vec<f64>]) -> EmbeddingMatrix<f64> {
        let ids = (0..rows.len()).map(|i| format!("s{i}")).collect();
        EmbeddingMatrix::from_rows(ids, rows).unwrap()
    }

    #[test]
    fn symmetric_pair_fit() {
        let x = vec![1.0, -2.0, 0.5];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let g = fit_gaussian(&emb(&[x.clone(), neg])).unwrap();
        assert!(g.mean.iter().all(|&m| m == 0.0));
        for a in 0..3 {
            for b in 0..3 {
                assert!((g.covariance[(a, b)] - 2.0 * x[a] * x[b]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn constant_rows_have_zero_covariance() {
        let g = fit_gaussian(&emb(&vec![vec![3.0, 4.0]; 5])).unwrap();
        assert_eq!(g.covariance.max_abs(), 0.0);
        assert_eq!(g.mean, vec![3.0, 4.0]);
    }

    #[test]
    fn needs_two_rows() {
        assert!(fit_gaussian(&emb(&[vec![1.0]])).is_err());
    }

    #[test]
    fn analytic_cases() {
        let d = 3;
        let id = GaussianSummary::<f64>::new(vec![0.0; d], Matrix::identity(d), 10).unwrap();
        let shifted = GaussianSummary::new(vec![1.0, 2.0, -2.0], Matrix::identity(d), 10).unwrap();
        assert!((frechet_distance(&id, &shifted).unwrap() - 9.0).abs() < 1e-12);
        assert!(frechet_distance(&id, &id).unwrap().abs() < 1e-12);

        let a = [4.0f64, 1.0, 0.25];
        let b = [1.0f64, 9.0, 0.0];
        let ga = GaussianSummary::new(vec![0.0; 3], Matrix::from_diagonal(&a), 10).unwrap();
        let gb = GaussianSummary::new(vec![0.0; 3], Matrix::from_diagonal(&b), 10).unwrap();
        let expected: f64 = a.iter().zip(&b).map(|(x, y)| (x.sqrt() - y.sqrt()).powi(2)).sum();
        assert!((frechet_distance(&ga, &gb).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let a = GaussianSummary::new(vec![0.0; 2], Matrix::identity(2), 2).unwrap();
        let b = GaussianSummary::new(vec![0.0; 3], Matrix::identity(3), 2).unwrap();
        assert!(matches!(frechet_distance(&a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn single_precision_path() {
        let a = GaussianSummary::<f32>::new(vec![0.0; 2], Matrix::identity(2), 2).unwrap();
        let b = GaussianSummary::<f32>::new(vec![3.0, 4.0], Matrix::identity(2), 2).unwrap();
        assert!((frechet_distance(&a, &b).unwrap() - 25.0).abs() < 1e-4);
    }
}
