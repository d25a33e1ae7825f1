//! Built-in oracle checks run by `semeval selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::tokenize;
use crate::error::Result;
use crate::linalg::{sqrtm_psd, Matrix};
use crate::mechanism::{check_attention_gradients, cross_entropy_loss, stage1_objective, AttentionInstance, LossTerms, LossWeights};
use crate::metrics::{sentence_bleu_n, BleuConfig};
use crate::semantic::{frechet_distance, nway_retrieval_accuracy, EmbeddingMatrix, GaussianSummary, RetrievalConfig};

#[derive(Debug, Clone, Serialize)]
pub struct SelfTestCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Sentence BLEU-1 test vectors: (hypothesis, reference, expected).
pub const BLEU1_VECTORS: [(&str, &str, f64); 4] = [
    (
        "He was also a member of the Royal Family.",
        "He also was awarded the Presidential Medal of Freedom.",
        0.556,
    ),
    (
        "The movie is surprisingly romanticized.",
        "The cumulative effect of the movie is repulsive and depressing.",
        0.221,
    ),
    (
        "He was a follower of Ronald Reagan.",
        "Taylor was born with dual British and American citizenship.",
        0.107,
    ),
    (
        "During his career, he married Joyce Halverson in 1951.",
        "He is married to singer Chynna Phillips.",
        0.111,
    ),
];

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> SelfTestCheck {
    match f() {
        Ok((passed, detail)) => SelfTestCheck { name, passed, detail },
        Err(e) => SelfTestCheck {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> Matrix<f64> {
    let b = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    b.matmul(&b.transpose()).expect("square").symmetrized()
}

pub fn run_selftest(seed: u64) -> Vec<SelfTestCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    out.push(check("bleu1 vectors", || {
        let cfg = BleuConfig::default();
        let mut worst = 0.0f64;
        for (h, r, want) in BLEU1_VECTORS {
            let got = sentence_bleu_n(&tokenize(h), &[tokenize(r)], 1, &cfg)?.score;
            worst = worst.max((got - want).abs());
        }
        Ok((worst <= 1e-3, format!("max |error| {worst:.2e}")))
    }));

    out.push(check("attention gradients", || {
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let inst = AttentionInstance::random(&mut rng, 3, 4, 5, 3)?;
            worst = worst.max(check_attention_gradients(&inst, 1e-5)?.max_relative_error);
        }
        Ok((worst < 1e-4, format!("max relative error {worst:.2e}")))
    }));

    out.push(check("psd square root", || {
        let mut worst = 0.0f64;
        for n in [1, 2, 5, 16] {
            let a = random_psd(&mut rng, n);
            let s = sqrtm_psd(&a)?;
            let err = s.matmul(&s)?.sub(&a)?.frobenius_norm() / a.frobenius_norm().max(1e-300);
            worst = worst.max(err);
        }
        Ok((worst < 1e-10, format!("max relative reconstruction error {worst:.2e}")))
    }));

    out.push(check("frechet analytic", || {
        let d = 8;
        let mu: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let want: f64 = mu.iter().map(|m| m * m).sum();
        let a = GaussianSummary::new(vec![0.0; d], Matrix::identity(d), 2)?;
        let b = GaussianSummary::new(mu, Matrix::identity(d), 2)?;
        let err = (frechet_distance(&a, &b)? - want).abs();
        Ok((err < 1e-9, format!("|error| {err:.2e}")))
    }));

    out.push(check("perfect retrieval", || {
        let m = 30;
        let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let e = EmbeddingMatrix::from_rows((0..m).map(|i| format!("s{i}")).collect(), &rows)?;
        let r = nway_retrieval_accuracy(&e, &e, &RetrievalConfig { n_way: 24, runs: 3, seed })?;
        Ok((r.mean_accuracy == 1.0, format!("24-way accuracy {}", r.mean_accuracy)))
    }));

    out.push(check("loss composition", || {
        let total: f64 = stage1_objective(&LossTerms::splat(1.0), &LossWeights::stage1_defaults())?;
        let ce = cross_entropy_loss(&[0.25f64; 4], 2)?;
        let ok = (total - 3.5).abs() < 1e-12 && (ce - 4f64.ln()).abs() < 1e-12;
        Ok((ok, format!("objective {total}, uniform CE {ce:.12}")))
    }));

    out
}
