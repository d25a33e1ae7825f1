//! End-to-end analyses. Every cell is the corresponding standalone metric
//! applied to the aligned inputs; nothing is cached between pipelines.

use indexmap::IndexMap;
use serde::Serialize;

use crate::corpus::{tokenize, Condition, Corpus, HypothesisSet, Sample, TokenSequence};
use crate::error::{Error, Result};
use crate::metrics::{
    corpus_bleu_n, corpus_content_recall, dist_n, head_entropy, mean_sentence_bleu_n, self_bleu, strip_prefixes,
    BleuConfig, DistDenominator, PrefixList, RecallAggregation, ReferenceMode, Smoothing, StopwordList,
};
use crate::protocol::report::{MetricKind, MetricReport, ReportLayout};
use crate::semantic::{
    accuracy_from_similarities, embedding_frechet_distance, similarity_matrix, EmbeddingMatrix, RetrievalConfig,
};

pub const DEFAULT_N_WAYS: [usize; 4] = [2, 4, 10, 24];
pub const DEFAULT_RUNS: usize = 10;
pub const DEFAULT_SEED: u64 = 20_240_607;

/// Every knob that can change a pipeline result. Serialized into the report
/// fingerprint.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolConfig {
    pub n_ways: Vec<usize>,
    pub retrieval_runs: usize,
    pub seed: u64,
    /// Smoothing and order for the BLEU tables.
    pub bleu: BleuConfig,
    pub self_bleu: BleuConfig,
    pub dist_denominator: DistDenominator,
    pub recall_aggregation: RecallAggregation,
    pub normalize_embeddings: bool,
    pub stopwords: StopwordList,
    pub prefixes: PrefixList,
    /// Caller-supplied settings echoed into the fingerprint (model id, sources...).
    pub extra: IndexMap<String, String>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            n_ways: DEFAULT_N_WAYS.to_vec(),
            retrieval_runs: DEFAULT_RUNS,
            seed: DEFAULT_SEED,
            bleu: BleuConfig::default(),
            self_bleu: BleuConfig::self_bleu_default(),
            dist_denominator: DistDenominator::Tokens,
            recall_aggregation: RecallAggregation::Micro,
            normalize_embeddings: false,
            stopwords: StopwordList::english(),
            prefixes: PrefixList::default(),
            extra: IndexMap::new(),
        }
    }
}

fn describe_bleu(cfg: &BleuConfig) -> String {
    match cfg.smoothing {
        Smoothing::None => format!("order {}, no smoothing", cfg.max_order),
        Smoothing::Epsilon(e) => format!("order {}, epsilon smoothing {e:e}", cfg.max_order),
    }
}

fn annotate(report: &mut MetricReport, cfg: &ProtocolConfig) {
    for (k, v) in &cfg.extra {
        report.note(k.clone(), v.clone());
    }
}

/// Embeddings for the hypotheses and the references of one system.
#[derive(Debug, Clone, Copy)]
pub struct PairedEmbeddings<'a> {
    pub hypotheses: &'a EmbeddingMatrix<f64>,
    pub references: &'a EmbeddingMatrix<f64>,
}

struct Aligned<'a> {
    ids: Vec<&'a str>,
    samples: Vec<&'a Sample>,
    hyps: Vec<TokenSequence>,
}

fn align<'a>(corpus: &'a Corpus, hyps: &'a HypothesisSet) -> Result<Aligned<'a>> {
    let pairs = hyps.aligned(corpus)?;
    if pairs.is_empty() {
        return Err(Error::InsufficientData("corpus is empty".into()));
    }
    Ok(Aligned {
        ids: pairs.iter().map(|(s, _)| s.id.as_str()).collect(),
        samples: pairs.iter().map(|(s, _)| *s).collect(),
        hyps: pairs.iter().map(|(_, h)| tokenize(h)).collect(),
    })
}

/// Retrieval accuracy, Content Recall, Dist-1/2, Head Entropy, Self-BLEU and FD.
pub fn run_main_eval(
    corpus: &Corpus,
    hyps: &HypothesisSet,
    embeddings: PairedEmbeddings<'_>,
    cfg: &ProtocolConfig,
) -> Result<MetricReport> {
    let a = align(corpus, hyps)?;
    let mut report = MetricReport::new(ReportLayout::MainTable, &hyps.system_name, hyps.condition, cfg);
    let queries = embeddings.hypotheses.select(&a.ids)?;
    let candidates = embeddings.references.select(&a.ids)?;
    let m = a.ids.len();

    let sims = similarity_matrix(&queries, &candidates)?;
    for &n in &cfg.n_ways {
        if n > m {
            report.warn(format!("{n}-way retrieval skipped: corpus has only {m} items"));
            continue;
        }
        let r = accuracy_from_similarities(
            &sims,
            &RetrievalConfig {
                n_way: n,
                runs: cfg.retrieval_runs,
                seed: cfg.seed,
            },
        )?;
        report.insert(format!("acc_{n}way"), r.mean_accuracy, MetricKind::Fraction)?;
        report.insert(format!("acc_{n}way_std"), r.std, MetricKind::Fraction)?;
    }

    let refs: Vec<TokenSequence> = a.samples.iter().map(|s| tokenize(&s.ground_truth)).collect();
    let recall_pairs: Vec<(TokenSequence, TokenSequence)> = a.hyps.iter().cloned().zip(refs).collect();
    report.insert(
        "content_recall",
        corpus_content_recall(&recall_pairs, &cfg.stopwords, cfg.recall_aggregation)?,
        MetricKind::Fraction,
    )?;
    report.insert("dist_1", dist_n(&a.hyps, 1, cfg.dist_denominator)?, MetricKind::Fraction)?;
    report.insert("dist_2", dist_n(&a.hyps, 2, cfg.dist_denominator)?, MetricKind::Fraction)?;
    let he = head_entropy(&a.hyps)?;
    report.insert("head_entropy", he.bits, MetricKind::Scalar)?;
    if he.skipped > 0 {
        report.warn(format!("head entropy skipped {} hypotheses shorter than two tokens", he.skipped));
    }
    report.insert("self_bleu", self_bleu(&a.hyps, &cfg.self_bleu)?, MetricKind::Fraction)?;
    report.insert(
        "fd",
        embedding_frechet_distance(&candidates, &queries, cfg.normalize_embeddings)?,
        MetricKind::Scalar,
    )?;

    let empty = a.hyps.iter().filter(|h| h.is_empty()).count();
    if empty > 0 {
        report.warn(format!("{empty} hypotheses are empty after tokenization"));
    }
    report.note("content_words", "approximated as tokens outside the stop list");
    report.note("self_bleu", describe_bleu(&cfg.self_bleu));
    report.note("dist_denominator", format!("{:?}", cfg.dist_denominator).to_lowercase());
    report.note("head_entropy_unit", "bits");
    report.note("retrieval", format!("{} runs, seed {}", cfg.retrieval_runs, cfg.seed));
    report.note("fd_embeddings", if cfg.normalize_embeddings { "l2-normalized" } else { "raw" });
    annotate(&mut report, cfg);
    Ok(report)
}

/// Corpus BLEU-1/2 scored against the paraphrase pool and against the
/// ground truth alone, side by side.
pub fn bleu_trap_analysis(corpus: &Corpus, hyps: &HypothesisSet, cfg: &ProtocolConfig) -> Result<MetricReport> {
    let a = align(corpus, hyps)?;
    if let Some(s) = a.samples.iter().find(|s| s.mtv_variants.is_empty()) {
        return Err(Error::InvalidInput(format!(
            "sample `{}` has no MTV variants; the multi-reference pool would be the ground truth alone",
            s.id
        )));
    }
    let mut report = MetricReport::new(ReportLayout::BleuTrap, &hyps.system_name, hyps.condition, cfg);
    for n in 1..=2 {
        for (mode, label) in [(ReferenceMode::MultiMtv, "mtv"), (ReferenceMode::Single, "single")] {
            let pairs: Vec<(TokenSequence, Vec<TokenSequence>)> = a
                .hyps
                .iter()
                .zip(&a.samples)
                .map(|(h, s)| (h.clone(), s.references(mode).into_iter().map(tokenize).collect()))
                .collect();
            let bcfg = BleuConfig {
                reference_mode: mode,
                ..cfg.bleu
            };
            report.insert(
                format!("bleu{n}_{label}"),
                corpus_bleu_n(&pairs, n, &bcfg)?.score,
                MetricKind::Fraction,
            )?;
            report.insert(
                format!("bleu{n}_{label}_sentence_mean"),
                mean_sentence_bleu_n(&pairs, n, &bcfg)?,
                MetricKind::Fraction,
            )?;
        }
    }
    report.note("bleu", describe_bleu(&cfg.bleu));
    report.note("aggregation", "corpus-level (pooled counts) and mean of sentence scores");
    report.note("mtv_pool", "ground truth plus all variants");
    annotate(&mut report, cfg);
    Ok(report)
}

/// Embeddings for the noise-dependency comparison.
#[derive(Debug, Clone, Copy)]
pub struct NoiseEmbeddings<'a> {
    pub references: &'a EmbeddingMatrix<f64>,
    pub real: &'a EmbeddingMatrix<f64>,
    pub noise: &'a EmbeddingMatrix<f64>,
}

struct ConditionMetrics {
    content_recall: f64,
    dist_2: f64,
    fd: f64,
}

fn condition_metrics(
    a: &Aligned<'_>,
    hyp_emb: &EmbeddingMatrix<f64>,
    ref_emb: &EmbeddingMatrix<f64>,
    cfg: &ProtocolConfig,
) -> Result<ConditionMetrics> {
    let pairs: Vec<(TokenSequence, TokenSequence)> = a
        .hyps
        .iter()
        .cloned()
        .zip(a.samples.iter().map(|s| tokenize(&s.ground_truth)))
        .collect();
    Ok(ConditionMetrics {
        content_recall: corpus_content_recall(&pairs, &cfg.stopwords, cfg.recall_aggregation)?,
        dist_2: dist_n(&a.hyps, 2, cfg.dist_denominator)?,
        fd: embedding_frechet_distance(&ref_emb.select(&a.ids)?, &hyp_emb.select(&a.ids)?, cfg.normalize_embeddings)?,
    })
}

/// Content Recall, Dist-2 and FD for real-input versus noise-input decoding.
///
/// The verdict is true when noise inputs lose content (lower recall) and
/// drift away from the reference distribution (higher FD).
pub fn noise_dependency_report(
    corpus: &Corpus,
    real: &HypothesisSet,
    noise: &HypothesisSet,
    embeddings: NoiseEmbeddings<'_>,
    cfg: &ProtocolConfig,
) -> Result<MetricReport> {
    if real.condition != Some(Condition::Real) || noise.condition != Some(Condition::Noise) {
        return Err(Error::InvalidInput(format!(
            "condition tags missing: expected real/noise, got {:?}/{:?}",
            real.condition, noise.condition
        )));
    }
    let ar = align(corpus, real)?;
    let an = align(corpus, noise)?;
    let r = condition_metrics(&ar, embeddings.real, embeddings.references, cfg)?;
    let n = condition_metrics(&an, embeddings.noise, embeddings.references, cfg)?;

    let mut report = MetricReport::new(ReportLayout::NoiseDependency, &real.system_name, None, cfg);
    for (name, rv, nv, kind) in [
        ("content_recall", r.content_recall, n.content_recall, MetricKind::Fraction),
        ("dist_2", r.dist_2, n.dist_2, MetricKind::Fraction),
        ("fd", r.fd, n.fd, MetricKind::Scalar),
    ] {
        report.insert(format!("{name}_real"), rv, kind)?;
        report.insert(format!("{name}_noise"), nv, kind)?;
        report.insert(format!("{name}_delta"), nv - rv, kind)?;
    }
    report.set_flag(
        "signal_dependency_verdict",
        n.content_recall < r.content_recall && n.fd > r.fd,
    );
    if noise.system_name != real.system_name {
        report.note("noise_system", noise.system_name.clone());
    }
    report.note("verdict_rule", "noise content recall < real AND noise FD > real");
    annotate(&mut report, cfg);
    Ok(report)
}

/// Corpus BLEU-1..4 before and after stripping stock openings from both
/// hypotheses and references, with the relative change per order.
pub fn prefix_strip_analysis(
    corpus: &Corpus,
    hyps: &HypothesisSet,
    prefixes: &PrefixList,
    cfg: &ProtocolConfig,
) -> Result<MetricReport> {
    if prefixes.is_empty() {
        return Err(Error::InvalidInput("prefix list is empty".into()));
    }
    let a = align(corpus, hyps)?;
    let refs: Vec<TokenSequence> = a.samples.iter().map(|s| tokenize(&s.ground_truth)).collect();
    let original: Vec<(TokenSequence, Vec<TokenSequence>)> =
        a.hyps.iter().cloned().zip(refs.iter().map(|r| vec![r.clone()])).collect();
    let stripped: Vec<(TokenSequence, Vec<TokenSequence>)> = original
        .iter()
        .map(|(h, r)| (strip_prefixes(h, prefixes), vec![strip_prefixes(&r[0], prefixes)]))
        .collect();

    let mut report = MetricReport::new(ReportLayout::PrefixStrip, &hyps.system_name, hyps.condition, cfg);
    let bcfg = BleuConfig {
        reference_mode: ReferenceMode::Single,
        ..cfg.bleu
    };
    for n in 1..=4 {
        let before = corpus_bleu_n(&original, n, &bcfg)?.score;
        let after = corpus_bleu_n(&stripped, n, &bcfg)?.score;
        let drop = if before > 0.0 {
            (after - before) / before
        } else {
            if after > 0.0 {
                report.warn(format!("BLEU-{n} is zero before stripping; relative change reported as 0"));
            }
            0.0
        };
        report.insert(format!("bleu{n}_original"), before, MetricKind::Fraction)?;
        report.insert(format!("bleu{n}_stripped"), after, MetricKind::Fraction)?;
        report.insert(format!("bleu{n}_drop"), drop, MetricKind::Fraction)?;
    }
    let changed_h = original.iter().zip(&stripped).filter(|(o, s)| o.0 != s.0).count();
    let changed_r = original.iter().zip(&stripped).filter(|(o, s)| o.1 != s.1).count();
    report.insert("stripped_hypotheses", changed_h as f64, MetricKind::Count)?;
    report.insert("stripped_references", changed_r as f64, MetricKind::Count)?;
    report.note("bleu", describe_bleu(&bcfg));
    report.note("prefixes", prefixes.prefixes().iter().map(TokenSequence::join).collect::<Vec<_>>().join(" | "));
    annotate(&mut report, cfg);
    Ok(report)
}
