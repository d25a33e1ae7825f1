//! Surface-form metrics over tokenized sentences.

pub mod bleu;
pub mod content;
pub mod diversity;
pub mod prefix;

pub use bleu::{
    bleu_stats, corpus_bleu_n, mean_sentence_bleu_n, score_from_stats, self_bleu, sentence_bleu_n, BleuConfig,
    BleuScore, BleuStats, ReferenceMode, Smoothing, MAX_BLEU_ORDER,
};
pub use content::{
    content_recall, content_recall_counts, corpus_content_recall, RecallAggregation, RecallCounts, StopwordList,
};
pub use diversity::{dist_n, head_entropy, DistDenominator, HeadEntropy};
pub use prefix::{strip_prefixes, PrefixList, DEFAULT_PREFIXES};
