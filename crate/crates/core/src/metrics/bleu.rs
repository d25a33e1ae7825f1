//! BLEU at sentence and corpus level with multi-reference clipping, and
//! Self-BLEU.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Ngram, TokenSequence};
use crate::error::{Error, Result};

pub const MAX_BLEU_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    None,
    /// Zero match counts are replaced by `ε` before taking the precision.
    Epsilon(f64),
}

/// Which references a sample is scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// Ground truth only.
    Single,
    /// Ground truth plus every paraphrase variant.
    MultiMtv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuConfig {
    pub max_order: usize,
    pub smoothing: Smoothing,
    pub reference_mode: ReferenceMode,
}

impl Default for BleuConfig {
    fn default() -> Self {
        Self {
            max_order: MAX_BLEU_ORDER,
            smoothing: Smoothing::None,
            reference_mode: ReferenceMode::Single,
        }
    }
}

impl BleuConfig {
    pub fn new(max_order: usize, smoothing: Smoothing, reference_mode: ReferenceMode) -> Result<Self> {
        let cfg = Self {
            max_order,
            smoothing,
            reference_mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Order 4 with ε = 1e-9, the Self-BLEU default.
    pub fn self_bleu_default() -> Self {
        Self {
            max_order: MAX_BLEU_ORDER,
            smoothing: Smoothing::Epsilon(1e-9),
            reference_mode: ReferenceMode::Single,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_order(self.max_order)?;
        if let Smoothing::Epsilon(eps) = self.smoothing {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "smoothing epsilon must be positive, got {eps}"
                )));
            }
        }
        Ok(())
    }
}

fn check_order(n: usize) -> Result<()> {
    if (1..=MAX_BLEU_ORDER).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "BLEU order must be in 1..={MAX_BLEU_ORDER}, got {n}"
        )))
    }
}

/// Sufficient statistics for BLEU up to some order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BleuStats {
    /// Clipped matches per order (index 0 = unigrams).
    pub matches: Vec<u64>,
    /// Hypothesis n-gram totals per order.
    pub totals: Vec<u64>,
    pub hyp_len: u64,
    /// Closest reference length.
    pub ref_len: u64,
}

impl BleuStats {
    fn zero(order: usize) -> Self {
        Self {
            matches: vec![0; order],
            totals: vec![0; order],
            hyp_len: 0,
            ref_len: 0,
        }
    }

    fn accumulate(&mut self, other: &BleuStats) {
        for (a, b) in self.matches.iter_mut().zip(&other.matches) {
            *a += b;
        }
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            *a += b;
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub score: f64,
    /// Modified precisions per order, after smoothing.
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
    /// Set when the hypothesis (or every hypothesis of a corpus) is empty.
    pub empty_hypothesis: bool,
}

/// Per-order n-gram counts of one sentence.
struct SentenceCounts<'a> {
    len: usize,
    per_order: Vec<HashMap<Ngram<'a>, u64>>,
}

impl<'a> SentenceCounts<'a> {
    fn new(seq: &'a TokenSequence, max_order: usize) -> Self {
        let per_order = (1..=max_order)
            .map(|n| {
                let mut m = HashMap::new();
                for g in seq.tokens().windows(n) {
                    *m.entry(g).or_insert(0) += 1;
                }
                m
            })
            .collect();
        Self {
            len: seq.len(),
            per_order,
        }
    }
}

fn closest_ref_len(hyp_len: usize, ref_lens: impl Iterator<Item = usize>) -> usize {
    ref_lens
        .min_by_key(|&r| (r.abs_diff(hyp_len), r))
        .unwrap_or(0)
}

fn stats_from_counts(hyp: &SentenceCounts<'_>, refs: &[&SentenceCounts<'_>], max_order: usize) -> BleuStats {
    let mut stats = BleuStats::zero(max_order);
    for k in 0..max_order {
        let mut matched = 0;
        for (g, &c) in &hyp.per_order[k] {
            let max_ref = refs
                .iter()
                .map(|r| r.per_order[k].get(g).copied().unwrap_or(0))
                .max()
                .unwrap_or(0);
            matched += c.min(max_ref);
        }
        stats.matches[k] = matched;
        stats.totals[k] = hyp.len.saturating_sub(k) as u64;
    }
    stats.hyp_len = hyp.len as u64;
    stats.ref_len = closest_ref_len(hyp.len, refs.iter().map(|r| r.len)) as u64;
    stats
}

/// Clipped n-gram statistics of `hyp` against `refs` for orders `1..=max_order`.
pub fn bleu_stats(hyp: &TokenSequence, refs: &[TokenSequence], max_order: usize) -> Result<BleuStats> {
    check_order(max_order)?;
    if refs.is_empty() {
        return Err(Error::InvalidInput("at least one reference is required".into()));
    }
    let h = SentenceCounts::new(hyp, max_order);
    let r: Vec<SentenceCounts<'_>> = refs.iter().map(|r| SentenceCounts::new(r, max_order)).collect();
    let r: Vec<&SentenceCounts<'_>> = r.iter().collect();
    Ok(stats_from_counts(&h, &r, max_order))
}

/// Turns accumulated statistics into a BLEU-`order` score.
pub fn score_from_stats(stats: &BleuStats, order: usize, smoothing: Smoothing) -> BleuScore {
    let mut out = BleuScore {
        score: 0.0,
        precisions: Vec::with_capacity(order),
        brevity_penalty: 0.0,
        hyp_len: stats.hyp_len,
        ref_len: stats.ref_len,
        empty_hypothesis: stats.hyp_len == 0,
    };
    if stats.hyp_len == 0 {
        return out;
    }
    let c = stats.hyp_len as f64;
    let r = stats.ref_len as f64;
    out.brevity_penalty = if c > r { 1.0 } else { (1.0 - r / c).exp() };

    let mut log_sum = 0.0;
    let mut zero = false;
    for k in 0..order {
        let m = stats.matches[k];
        let t = stats.totals[k];
        let p = match (m, smoothing) {
            (0, Smoothing::None) => {
                zero = true;
                0.0
            }
            (0, Smoothing::Epsilon(eps)) => eps / t.max(1) as f64,
            _ => m as f64 / t as f64,
        };
        out.precisions.push(p);
        if p > 0.0 {
            log_sum += p.ln();
        }
    }
    if !zero {
        out.score = out.brevity_penalty * (log_sum / order as f64).exp();
    }
    out
}

/// Sentence BLEU-`n` of `hyp` against one or more references.
pub fn sentence_bleu_n(hyp: &TokenSequence, refs: &[TokenSequence], n: usize, cfg: &BleuConfig) -> Result<BleuScore> {
    cfg.validate()?;
    let stats = bleu_stats(hyp, refs, n)?;
    Ok(score_from_stats(&stats, n, cfg.smoothing))
}

/// Corpus BLEU-`n`: clipped matches, totals and lengths are summed over all
/// pairs before the precisions and brevity penalty are formed.
pub fn corpus_bleu_n(pairs: &[(TokenSequence, Vec<TokenSequence>)], n: usize, cfg: &BleuConfig) -> Result<BleuScore> {
    cfg.validate()?;
    check_order(n)?;
    if pairs.is_empty() {
        return Err(Error::InsufficientData("corpus BLEU needs at least one pair".into()));
    }
    let per_pair = pairs
        .par_iter()
        .map(|(h, refs)| bleu_stats(h, refs, n))
        .collect::<Result<Vec<_>>>()?;
    let mut total = BleuStats::zero(n);
    for s in &per_pair {
        total.accumulate(s);
    }
    Ok(score_from_stats(&total, n, cfg.smoothing))
}

/// Arithmetic mean of sentence-level BLEU-`n` over the pairs.
pub fn mean_sentence_bleu_n(pairs: &[(TokenSequence, Vec<TokenSequence>)], n: usize, cfg: &BleuConfig) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData("mean BLEU needs at least one pair".into()));
    }
    let scores = pairs
        .par_iter()
        .map(|(h, refs)| sentence_bleu_n(h, refs, n, cfg).map(|s| s.score))
        .collect::<Result<Vec<_>>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Mean BLEU of every hypothesis against all the others, at
/// `cfg.max_order` with `cfg.smoothing`. Lower means more diverse.
pub fn self_bleu(hyps: &[TokenSequence], cfg: &BleuConfig) -> Result<f64> {
    cfg.validate()?;
    if hyps.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "Self-BLEU needs at least 2 hypotheses, got {}",
            hyps.len()
        )));
    }
    let order = cfg.max_order;
    let counts: Vec<SentenceCounts<'_>> = hyps.iter().map(|h| SentenceCounts::new(h, order)).collect();
    let scores: Vec<f64> = (0..hyps.len())
        .into_par_iter()
        .map(|i| {
            let others: Vec<&SentenceCounts<'_>> = counts
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, c)| c)
                .collect();
            let stats = stats_from_counts(&counts[i], &others, order);
            score_from_stats(&stats, order, cfg.smoothing).score
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// `none`, `epsilon` (ε = 1e-9) or `epsilon:<ε>`.
impl std::str::FromStr for Smoothing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unknown smoothing `{s}`; expected none, epsilon or epsilon:<value>"));
        match s.split_once(':') {
            None if s == "none" => Ok(Smoothing::None),
            None if s == "epsilon" => Ok(Smoothing::Epsilon(1e-9)),
            Some(("epsilon", v)) => {
                let eps: f64 = v.parse().map_err(|_| bad())?;
                if eps > 0.0 && eps.is_finite() {
                    Ok(Smoothing::Epsilon(eps))
                } else {
                    Err(bad())
                }
            }
            _ => Err(bad()),
        }
    }
}
