//! Vocabulary and structural diversity: Dist-n and Head Entropy.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::TokenSequence;
use crate::error::{Error, Result};

/// Normalizer for Dist-n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistDenominator {
    /// Total generated tokens.
    #[default]
    Tokens,
    /// Total generated n-grams of the same order.
    Ngrams,
}

/// Distinct n-grams across all hypotheses over the chosen denominator.
pub fn dist_n(hyps: &[TokenSequence], n: usize, denominator: DistDenominator) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("n-gram order must be at least 1".into()));
    }
    if hyps.is_empty() {
        return Err(Error::InsufficientData("Dist-n of an empty corpus".into()));
    }
    let mut distinct = HashSet::new();
    let mut tokens = 0usize;
    let mut grams = 0usize;
    for h in hyps {
        tokens += h.len();
        for g in h.tokens().windows(n) {
            grams += 1;
            distinct.insert(g);
        }
    }
    let denom = match denominator {
        DistDenominator::Tokens => tokens,
        DistDenominator::Ngrams => grams,
    };
    if denom == 0 {
        return Err(Error::InsufficientData(format!(
            "Dist-{n} denominator is zero"
        )));
    }
    Ok(distinct.len() as f64 / denom as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadEntropy {
    /// Shannon entropy in bits.
    pub bits: f64,
    pub usable: usize,
    /// Hypotheses with fewer than two tokens.
    pub skipped: usize,
}

/// Entropy of the distribution of opening bigrams.
pub fn head_entropy(hyps: &[TokenSequence]) -> Result<HeadEntropy> {
    let mut counts: HashMap<&[String], usize> = HashMap::new();
    let mut skipped = 0;
    for h in hyps {
        if h.len() < 2 {
            skipped += 1;
            continue;
        }
        *counts.entry(&h.tokens()[..2]).or_insert(0) += 1;
    }
    let usable: usize = counts.values().sum();
    if usable == 0 {
        return Err(Error::InsufficientData(
            "no hypothesis has at least two tokens".into(),
        ));
    }
    // Sorted so the floating-point sum does not depend on hash order.
    let mut freqs: Vec<usize> = counts.into_values().collect();
    freqs.sort_unstable();
    let total = usable as f64;
    let bits = freqs
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0);
    Ok(HeadEntropy {
        bits,
        usable,
        skipped,
    })
}

impl std::str::FromStr for DistDenominator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tokens" => Ok(DistDenominator::Tokens),
            "ngrams" => Ok(DistDenominator::Ngrams),
            other => Err(Error::InvalidInput(format!("unknown Dist denominator `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    fn corpus(lines: &[&str]) -> Vec<TokenSequence> {
        lines.iter().map(|l| tokenize(l)).collect()
    }

    #[test]
    fn dist_examples() {
        let c = corpus(&["a b", "a b"]);
        assert_eq!(dist_n(&c, 1, DistDenominator::Tokens).unwrap(), 0.5);
        assert_eq!(dist_n(&c, 2, DistDenominator::Ngrams).unwrap(), 0.5);
        let c = corpus(&["a b c", "d e"]);
        assert_eq!(dist_n(&c, 1, DistDenominator::Tokens).unwrap(), 1.0);
        assert_eq!(dist_n(&c, 2, DistDenominator::Tokens).unwrap(), 3.0 / 5.0);
    }

    #[test]
    fn dist_errors() {
        assert!(dist_n(&[], 1, DistDenominator::Tokens).is_err());
        assert!(dist_n(&corpus(&["a"]), 2, DistDenominator::Ngrams).is_err());
        assert!(dist_n(&corpus(&["a"]), 0, DistDenominator::Tokens).is_err());
    }

    #[test]
    fn entropy_examples() {
        let c = corpus(&["He was a king", "He was tall", "He was"]);
        assert_eq!(head_entropy(&c).unwrap().bits, 0.0);
        let c = corpus(&["a b", "c d", "e f", "g h"]);
        assert!((head_entropy(&c).unwrap().bits - 2.0).abs() < 1e-15);
        let c = corpus(&["a b", "a b", "c d", "x"]);
        let h = head_entropy(&c).unwrap();
        assert_eq!(h.skipped, 1);
        let p: f64 = 2.0 / 3.0;
        let expected = -(p * p.log2() + (1.0 - p) * (1.0 - p).log2());
        assert!((h.bits - expected).abs() < 1e-15);
    }

    #[test]
    fn entropy_needs_usable_hypotheses() {
        assert!(head_entropy(&corpus(&["a", ""])).is_err());
    }
}
