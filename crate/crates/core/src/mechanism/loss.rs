//! Attribute-head losses and the weighted stage-one objective.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// `−ln ŷ_target`, with ŷ floored at 1e-12.
pub fn cross_entropy_loss<T: Scalar>(pred_probs: &[T], target: usize) -> Result<T> {
    if target >= pred_probs.len() {
        return Err(Error::InvalidInput(format!(
            "target class {target} out of range for {} classes",
            pred_probs.len()
        )));
    }
    if pred_probs.iter().any(|&p| !p.is_finite() || p < T::zero()) {
        return Err(Error::InvalidInput("probabilities must be finite and non-negative".into()));
    }
    let total: T = pred_probs.iter().copied().sum();
    let tol = if T::epsilon() < lit(1e-10) { lit(1e-9) } else { lit(1e-5) };
    if (total - T::one()).abs() > tol {
        return Err(Error::InvalidInput(format!("probabilities sum to {total}, not 1")));
    }
    Ok(-pred_probs[target].max(lit(1e-12)).ln())
}

/// Mean squared difference.
pub fn mse_loss<T: Scalar>(pred: &[T], target: &[T]) -> Result<T> {
    if pred.len() != target.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} targets",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput("MSE of empty vectors".into()));
    }
    let sum: T = pred.iter().zip(target).map(|(&p, &t)| (t - p) * (t - p)).sum();
    Ok(sum / T::from_usize(pred.len()).expect("length fits the scalar"))
}

/// Scalar loss values entering the objective.
///
/// The alignment loss is carried as its contrastive and commitment parts;
/// [`LossTerms::grouped`] puts a single alignment value in `contrastive`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossTerms<T> {
    pub contrastive: T,
    pub commitment: T,
    pub recon: T,
    pub stm: T,
    pub tpc: T,
    pub len: T,
    pub spr: T,
}

impl<T: Scalar> LossTerms<T> {
    pub fn grouped(align: T, recon: T, stm: T, tpc: T, len: T, spr: T) -> Self {
        Self {
            contrastive: align,
            commitment: T::zero(),
            recon,
            stm,
            tpc,
            len,
            spr,
        }
    }

    pub fn splat(v: T) -> Self {
        Self {
            contrastive: v,
            commitment: v,
            recon: v,
            stm: v,
            tpc: v,
            len: v,
            spr: v,
        }
    }

    fn values(&self) -> [T; 7] {
        [
            self.contrastive,
            self.commitment,
            self.recon,
            self.stm,
            self.tpc,
            self.len,
            self.spr,
        ]
    }
}

/// Loss weights: four group weights, or one weight per term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LossWeights<T> {
    /// `align` scales contrastive + commitment, `cls` scales stm + tpc and
    /// `reg` scales len + spr.
    Grouped { align: T, recon: T, cls: T, reg: T },
    PerTerm {
        contrastive: T,
        commitment: T,
        recon: T,
        stm: T,
        tpc: T,
        len: T,
        spr: T,
    },
}

impl<T: Scalar> LossWeights<T> {
    /// Stage-one defaults: contrastive 0.5, commitment 0.7, recon 0.5,
    /// stm 0.3, tpc 0.3, len 0.9, spr 0.3.
    pub fn stage1_defaults() -> Self {
        LossWeights::PerTerm {
            contrastive: lit(0.5),
            commitment: lit(0.7),
            recon: lit(0.5),
            stm: lit(0.3),
            tpc: lit(0.3),
            len: lit(0.9),
            spr: lit(0.3),
        }
    }

    fn per_term(&self) -> [T; 7] {
        match *self {
            LossWeights::Grouped { align, recon, cls, reg } => [align, align, recon, cls, cls, reg, reg],
            LossWeights::PerTerm {
                contrastive,
                commitment,
                recon,
                stm,
                tpc,
                len,
                spr,
            } => [contrastive, commitment, recon, stm, tpc, len, spr],
        }
    }
}

pub fn stage1_objective<T: Scalar>(terms: &LossTerms<T>, weights: &LossWeights<T>) -> Result<T> {
    let values = terms.values();
    if values.iter().any(|v| !v.is_finite() || *v < T::zero()) {
        return Err(Error::InvalidInput("loss terms must be finite and non-negative".into()));
    }
    let w = weights.per_term();
    if w.iter().any(|v| !v.is_finite() || *v < T::zero()) {
        return Err(Error::InvalidInput("loss weights must be finite and non-negative".into()));
    }
    Ok(neumaier_sum(values.iter().zip(&w).map(|(&v, &w)| v * w)))
}

/// Compensated summation, so short weighted sums round like the exact value.
fn neumaier_sum<T: Scalar>(xs: impl Iterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for x in xs {
        let t = sum + x;
        comp = comp + if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_entropy_cases() {
        assert_eq!(cross_entropy_loss(&[0.0, 1.0, 0.0], 1).unwrap(), 0.0);
        let u = [0.25; 4];
        assert!((cross_entropy_loss(&u, 2).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!((cross_entropy_loss(&[0.25f64, 0.75], 0).unwrap() - 1.3863).abs() < 1e-4);
        assert!((cross_entropy_loss(&[1.0, 0.0], 1).unwrap() - 1e-12f64.ln().abs()).abs() < 1e-9);
    }

    #[test]
    fn cross_entropy_rejects_bad_simplex() {
        assert!(cross_entropy_loss(&[0.5, 0.6], 0).is_err());
        assert!(cross_entropy_loss(&[1.5, -0.5], 0).is_err());
        assert!(cross_entropy_loss(&[1.0], 1).is_err());
    }

    #[test]
    fn mse_cases() {
        assert_eq!(mse_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[0.0], &[2.0]).unwrap(), 4.0);
        assert!(mse_loss(&[0.0], &[2.0, 1.0]).is_err());
        assert!(mse_loss::<f64>(&[], &[]).is_err());
    }

    #[test]
    fn objective_cases() {
        let ones = LossWeights::Grouped { align: 1.0, recon: 1.0, cls: 1.0, reg: 1.0 };
        assert_eq!(stage1_objective(&LossTerms::default(), &ones).unwrap(), 0.0);
        let t = LossTerms::grouped(1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        assert_eq!(stage1_objective(&t, &ones).unwrap(), 6.0);
        let v: f64 = stage1_objective(&LossTerms::splat(1.0), &LossWeights::stage1_defaults()).unwrap();
        assert_eq!(v, 3.5);
    }

    #[test]
    fn objective_rejects_negative() {
        let ones = LossWeights::Grouped { align: 1.0, recon: 1.0, cls: 1.0, reg: 1.0 };
        let t = LossTerms::grouped(-1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(stage1_objective(&t, &ones).is_err());
    }
}
