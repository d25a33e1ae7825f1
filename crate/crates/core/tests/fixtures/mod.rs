//! Synthetic inputs shared by integration tests.

#![allow(dead_code)]

use indexmap::IndexMap;
use semeval_core::corpus::{Condition, Corpus, HypothesisSet, Sample};
use semeval_core::semantic::EmbeddingMatrix;

pub const DIM: usize = 64;

/// Hashed bag of words (FNV-1a into two buckets per token), lowercased.
pub fn hash_embed(text: &str) -> Vec<f64> {
    let mut v = vec![0.0; DIM];
    for w in text.split_whitespace() {
        let w = w.to_lowercase();
        let h = w.bytes().fold(0xcbf29ce484222325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3));
        v[(h % DIM as u64) as usize] += 1.0;
        v[((h >> 17) % DIM as u64) as usize] -= 0.5;
    }
    v[DIM - 1] += 0.05;
    v
}

pub fn embed_all<'a>(items: impl IntoIterator<Item = (&'a str, &'a str)>) -> EmbeddingMatrix<f64> {
    let (ids, rows): (Vec<String>, Vec<Vec<f64>>) = items.into_iter().map(|(id, t)| (id.to_string(), hash_embed(t))).unzip();
    EmbeddingMatrix::from_rows(ids, &rows).unwrap()
}

pub fn reference_embeddings(corpus: &Corpus) -> EmbeddingMatrix<f64> {
    embed_all(corpus.iter().map(|s| (s.id.as_str(), s.ground_truth.as_str())))
}

pub fn hypothesis_embeddings(h: &HypothesisSet) -> EmbeddingMatrix<f64> {
    embed_all(h.hypotheses.iter().map(|(k, v)| (k.as_str(), v.as_str())))
}

pub const SENTENCES: [&str; 24] = [
    "He also was awarded the Presidential Medal of Freedom.",
    "The cumulative effect of the movie is repulsive and depressing.",
    "Taylor was born with dual British and American citizenship.",
    "He is married to singer Chynna Phillips.",
    "The film offers a gentle portrait of small town life.",
    "She studied chemistry at the University of Vienna.",
    "A sharp and funny script carries the weak second act.",
    "He served two terms as governor of Arkansas.",
    "The soundtrack is the best thing about this picture.",
    "Her first novel sold over a million copies.",
    "The director never decides what story he wants to tell.",
    "He played professional baseball for the Chicago Cubs.",
    "An uneven but often moving meditation on grief.",
    "She founded a shipping company in Rotterdam.",
    "The performances are wooden and the dialogue is stilted.",
    "He was elected to parliament in nineteen seventy.",
    "It is a thrilling ride from start to finish.",
    "Her brother later became a famous painter.",
    "The plot collapses under its own ambition.",
    "He retired to a farm in rural Vermont.",
    "Visually stunning yet emotionally hollow.",
    "She won three gold medals at the games.",
    "The jokes land more often than they miss.",
    "He wrote the music for several Broadway shows.",
];

pub const VARIANTS: [&str; 3] = ["In short,", "Put simply,", "To rephrase:"];

pub fn corpus(n: usize) -> Corpus {
    let samples = SENTENCES
        .iter()
        .cycle()
        .take(n)
        .enumerate()
        .map(|(i, s)| Sample {
            id: format!("s{i:03}"),
            ground_truth: if i < SENTENCES.len() { s.to_string() } else { format!("{s} Take {i}.") },
            mtv_variants: vec![format!("{} {}", VARIANTS[i % 3], s.to_lowercase())],
            attributes: None,
        })
        .collect();
    Corpus::new(samples).unwrap()
}

pub fn hyps(corpus: &Corpus, name: &str, condition: Option<Condition>, f: impl Fn(usize, &Sample) -> String) -> HypothesisSet {
    let hypotheses: IndexMap<String, String> = corpus.iter().enumerate().map(|(i, s)| (s.id.clone(), f(i, s))).collect();
    HypothesisSet {
        system_name: name.to_string(),
        condition,
        hypotheses,
    }
}

/// Deterministic nonsense with no overlap with the corpus vocabulary.
pub fn gibberish(i: usize) -> String {
    (0..6).map(|k| format!("zq{}x{}", (i * 7 + k * 13) % 97, k)).collect::<Vec<_>>().join(" ")
}
