//! Cosine similarity and N-way retrieval accuracy.
//!
//! For each query, N−1 negative candidates are drawn uniformly without
//! replacement from the other items; the query succeeds only when its own
//! candidate scores strictly higher than every negative.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::scalar::Scalar;
use crate::semantic::EmbeddingMatrix;

pub fn cosine_similarity<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("vectors of length {} and {}", a.len(), b.len())));
    }
    let na = norm(a);
    let nb = norm(b);
    if na == T::zero() || nb == T::zero() {
        return Err(Error::InvalidInput("cosine similarity of a zero-norm vector".into()));
    }
    Ok(dot(a, b) / (na * nb))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub n_way: usize,
    pub runs: usize,
    pub seed: u64,
}

impl RetrievalConfig {
    pub fn validate(&self, corpus_size: usize) -> Result<()> {
        if self.n_way < 2 {
            return Err(Error::InvalidInput(format!("N must be at least 2, got {}", self.n_way)));
        }
        if self.runs == 0 {
            return Err(Error::InvalidInput("at least one retrieval run is required".into()));
        }
        if self.n_way > corpus_size {
            return Err(Error::InvalidInput(format!(
                "N = {} exceeds corpus size {corpus_size}",
                self.n_way
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub n_way: usize,
    pub mean_accuracy: f64,
    pub per_run: Vec<f64>,
    /// Sample standard deviation over runs (0 for a single run).
    pub std: f64,
}

/// RNG for the negatives of one query in one run.
///
/// The ChaCha stream is selected by the run and the word position by the
/// query, so draws are independent of evaluation order and thread count.
pub fn negative_rng(seed: u64, run: usize, query: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng.set_word_pos((query as u128) << 32);
    rng
}

/// Indices of the N−1 negatives for `query` among `m` items.
pub fn sample_negatives(m: usize, query: usize, n_way: usize, seed: u64, run: usize) -> Vec<usize> {
    let mut rng = negative_rng(seed, run, query);
    index::sample(&mut rng, m - 1, n_way - 1)
        .into_iter()
        .map(|k| if k < query { k } else { k + 1 })
        .collect()
}

/// `S[i][j] = cos(query_i, candidate_j)` with candidates aligned to query ids.
pub fn similarity_matrix<T: Scalar>(queries: &EmbeddingMatrix<T>, candidates: &EmbeddingMatrix<T>) -> Result<Vec<Vec<f64>>> {
    if queries.dim() != candidates.dim() {
        return Err(Error::Shape(format!(
            "query dimension {} vs candidate dimension {}",
            queries.dim(),
            candidates.dim()
        )));
    }
    if queries.len() != candidates.len() {
        return Err(Error::InvalidInput(format!(
            "{} queries but {} candidates",
            queries.len(),
            candidates.len()
        )));
    }
    let aligned = candidates.select(queries.ids())?;
    (0..queries.len())
        .into_par_iter()
        .map(|i| {
            (0..aligned.len())
                .map(|j| cosine_similarity(queries.row(i), aligned.row(j)).map(|s| s.to_f64_lossy()))
                .collect::<Result<Vec<f64>>>()
                .map_err(|e| match e {
                    Error::InvalidInput(_) => Error::InvalidInput(format!(
                        "zero-norm embedding involved in query `{}`",
                        queries.ids()[i]
                    )),
                    other => other,
                })
        })
        .collect()
}

pub fn nway_retrieval_accuracy<T: Scalar>(
    queries: &EmbeddingMatrix<T>,
    candidates: &EmbeddingMatrix<T>,
    cfg: &RetrievalConfig,
) -> Result<RetrievalResult> {
    let sims = similarity_matrix(queries, candidates)?;
    accuracy_from_similarities(&sims, cfg)
}

/// Retrieval accuracy from a precomputed square similarity matrix whose
/// diagonal holds the positive pairs.
pub fn accuracy_from_similarities(sims: &[Vec<f64>], cfg: &RetrievalConfig) -> Result<RetrievalResult> {
    let m = sims.len();
    cfg.validate(m)?;
    let per_run: Vec<f64> = (0..cfg.runs)
        .map(|run| {
            let hits: Vec<bool> = (0..m)
                .into_par_iter()
                .map(|i| {
                    let positive = sims[i][i];
                    sample_negatives(m, i, cfg.n_way, cfg.seed, run)
                        .into_iter()
                        .all(|j| positive > sims[i][j])
                })
                .collect();
            hits.iter().filter(|&&h| h).count() as f64 / m as f64
        })
        .collect();
    let mean = per_run.iter().sum::<f64>() / per_run.len() as f64;
    let std = if per_run.len() > 1 {
        (per_run.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (per_run.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(RetrievalResult {
        n_way: cfg.n_way,
        mean_accuracy: mean,
        per_run,
        std,
    })
}
