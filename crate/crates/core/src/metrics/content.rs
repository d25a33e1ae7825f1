//! Content Recall: how many non-stopword reference words the hypothesis
//! recovers.
//!
//! Content words are approximated as tokens whose lowercase form is not in
//! the stop list; no part-of-speech tagging is done.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};

use crate::corpus::TokenSequence;
use crate::error::{Error, Result};

const ENGLISH: &str = include_str!("../../data/stopwords_en.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            words: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }

    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(ENGLISH)
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Serialized as the sorted word list.
impl Serialize for StopwordList {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut words: Vec<&String> = self.words.iter().collect();
        words.sort();
        words.serialize(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecallAggregation {
    /// Pooled matches over pooled reference content words.
    #[default]
    Micro,
    /// Mean of per-sentence recalls; sentences without content words are skipped.
    Macro,
}

/// Matched and total reference content-word occurrences for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RecallCounts {
    pub matched: usize,
    pub total: usize,
}

impl RecallCounts {
    pub fn recall(&self) -> Option<f64> {
        (self.total > 0).then(|| self.matched as f64 / self.total as f64)
    }
}

pub fn content_recall_counts(hyp: &TokenSequence, reference: &TokenSequence, stop: &StopwordList) -> RecallCounts {
    let hyp_words: HashSet<String> = hyp.iter().map(|t| t.to_lowercase()).collect();
    let mut counts = RecallCounts::default();
    for word in reference.iter().map(|t| t.to_lowercase()) {
        if stop.words.contains(&word) {
            continue;
        }
        counts.total += 1;
        if hyp_words.contains(&word) {
            counts.matched += 1;
        }
    }
    counts
}

/// Sentence-level Content Recall; `None` when the reference has no content words.
pub fn content_recall(hyp: &TokenSequence, reference: &TokenSequence, stop: &StopwordList) -> Result<Option<f64>> {
    ensure_stoplist(stop)?;
    Ok(content_recall_counts(hyp, reference, stop).recall())
}

/// Corpus Content Recall over `(hypothesis, reference)` pairs.
pub fn corpus_content_recall(
    pairs: &[(TokenSequence, TokenSequence)],
    stop: &StopwordList,
    aggregation: RecallAggregation,
) -> Result<f64> {
    ensure_stoplist(stop)?;
    let counts: Vec<RecallCounts> = pairs
        .iter()
        .map(|(h, r)| content_recall_counts(h, r, stop))
        .collect();
    match aggregation {
        RecallAggregation::Micro => {
            let matched: usize = counts.iter().map(|c| c.matched).sum();
            let total: usize = counts.iter().map(|c| c.total).sum();
            if total == 0 {
                return Err(Error::InsufficientData(
                    "references contain no content words".into(),
                ));
            }
            Ok(matched as f64 / total as f64)
        }
        RecallAggregation::Macro => {
            let recalls: Vec<f64> = counts.iter().filter_map(RecallCounts::recall).collect();
            if recalls.is_empty() {
                return Err(Error::InsufficientData(
                    "references contain no content words".into(),
                ));
            }
            Ok(recalls.iter().sum::<f64>() / recalls.len() as f64)
        }
    }
}

fn ensure_stoplist(stop: &StopwordList) -> Result<()> {
    if stop.is_empty() {
        Err(Error::InvalidInput("stop list is empty".into()))
    } else {
        Ok(())
    }
}

impl std::str::FromStr for RecallAggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro" => Ok(RecallAggregation::Micro),
            "macro" => Ok(RecallAggregation::Macro),
            other => Err(Error::InvalidInput(format!("unknown recall aggregation `{other}`"))),
        }
    }
}
