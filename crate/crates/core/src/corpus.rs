//! Evaluation items, hypothesis sets and the tokenizer shared by every
//! surface-form metric.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

use indexmap::IndexMap;
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::metrics::ReferenceMode;

/// Predicted or gold semantic attributes of a sentence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttributeLabels {
    pub sentiment: Option<String>,
    pub topic: Option<String>,
    /// Word count.
    pub length: Option<u32>,
    /// Mean surprisal.
    pub surprisal: Option<f64>,
}

impl AttributeLabels {
    fn is_empty(&self) -> bool {
        self.sentiment.is_none()
            && self.topic.is_none()
            && self.length.is_none()
            && self.surprisal.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub ground_truth: String,
    /// Paraphrase variants of the ground truth, possibly empty.
    pub mtv_variants: Vec<String>,
    pub attributes: Option<AttributeLabels>,
}

impl Sample {
    /// Reference sentences used for scoring under `mode`.
    ///
    /// The multi-reference pool always starts with the ground truth.
    pub fn references(&self, mode: ReferenceMode) -> Vec<&str> {
        match mode {
            ReferenceMode::Single => vec![self.ground_truth.as_str()],
            ReferenceMode::MultiMtv => std::iter::once(self.ground_truth.as_str())
                .chain(self.mtv_variants.iter().map(String::as_str))
                .collect(),
        }
    }
}

/// Samples in file order with an id index.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    samples: Vec<Sample>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let mut index = HashMap::with_capacity(samples.len());
        for (i, s) in samples.iter().enumerate() {
            validate_sample(s)?;
            if index.insert(s.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }
        Ok(Self { samples, index })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Sample> {
        self.index.get(id).map(|&i| &self.samples[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.samples.iter().map(|s| s.id.as_str())
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sample> {
        self.samples.iter()
    }
}

fn validate_sample(s: &Sample) -> Result<()> {
    if s.id.is_empty() {
        return Err(Error::InvalidInput("sample id is empty".into()));
    }
    if s.ground_truth.trim().is_empty() {
        return Err(Error::InvalidInput(format!(
            "sample `{}` has an empty ground truth",
            s.id
        )));
    }
    if let Some(attrs) = &s.attributes {
        if attrs.length == Some(0) {
            return Err(Error::InvalidInput(format!(
                "sample `{}` has length 0",
                s.id
            )));
        }
        if let Some(spr) = attrs.surprisal {
            if !spr.is_finite() || spr < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "sample `{}` has invalid surprisal {spr}",
                    s.id
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct CorpusRecord {
    id: Option<String>,
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    mtv: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sentiment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    topic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    length: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    surprisal: Option<f64>,
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file), &path.display().to_string())
}

/// Parses corpus JSONL from any reader; `origin` labels error messages.
pub fn read_corpus(reader: impl BufRead, origin: &str) -> Result<Corpus> {
    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CorpusRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: lineno,
            message: e.to_string(),
        })?;
        let id = rec.id.ok_or(Error::MissingField {
            path: origin.to_string(),
            line: lineno,
            field: "id",
        })?;
        let text = rec.text.ok_or(Error::MissingField {
            path: origin.to_string(),
            line: lineno,
            field: "text",
        })?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let attrs = AttributeLabels {
            sentiment: rec.sentiment,
            topic: rec.topic,
            length: rec.length,
            surprisal: rec.surprisal,
        };
        let sample = Sample {
            id,
            ground_truth: text,
            mtv_variants: rec.mtv,
            attributes: (!attrs.is_empty()).then_some(attrs),
        };
        validate_sample(&sample).map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: lineno,
            message: e.to_string(),
        })?;
        samples.push(sample);
    }
    Corpus::new(samples)
}

pub fn write_corpus(path: impl AsRef<Path>, samples: &[Sample]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in samples {
        let attrs = s.attributes.clone().unwrap_or_default();
        let rec = CorpusRecord {
            id: Some(s.id.clone()),
            text: Some(s.ground_truth.clone()),
            mtv: s.mtv_variants.clone(),
            sentiment: attrs.sentiment,
            topic: attrs.topic,
            length: attrs.length,
            surprisal: attrs.surprisal,
        };
        let line = serde_json::to_string(&rec).expect("corpus record serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Whether hypotheses were decoded from real signals or from noise inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Real,
    Noise,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Real => "real",
            Condition::Noise => "noise",
        })
    }
}

impl std::str::FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Condition::Real),
            "noise" => Ok(Condition::Noise),
            other => Err(Error::InvalidInput(format!(
                "condition must be `real` or `noise`, got `{other}`"
            ))),
        }
    }
}

/// One system's outputs under one condition.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisSet {
    pub system_name: String,
    pub condition: Option<Condition>,
    pub hypotheses: IndexMap<String, String>,
}

impl HypothesisSet {
    /// Pairs every corpus sample, in corpus order, with its hypothesis.
    pub fn aligned<'a>(&'a self, corpus: &'a Corpus) -> Result<Vec<(&'a Sample, &'a str)>> {
        for id in self.hypotheses.keys() {
            if !corpus.contains(id) {
                return Err(Error::UnknownId(id.clone()));
            }
        }
        corpus
            .iter()
            .map(|s| {
                self.hypotheses
                    .get(&s.id)
                    .map(|h| (s, h.as_str()))
                    .ok_or_else(|| Error::MissingId(s.id.clone()))
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }
}

/// Reads hypothesis JSONL: `{"id", "hyp"}` per line, optionally preceded by
/// a header `{"system_name", "condition"}`. Explicit arguments override the
/// header. Every id must exist in `corpus`.
pub fn load_hypotheses(
    path: impl AsRef<Path>,
    corpus: &Corpus,
    system_name: Option<&str>,
    condition: Option<Condition>,
) -> Result<HypothesisSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_hypotheses(
        BufReader::new(file),
        &path.display().to_string(),
        corpus,
        system_name,
        condition,
    )
}

pub fn read_hypotheses(
    reader: impl BufRead,
    origin: &str,
    corpus: &Corpus,
    system_name: Option<&str>,
    condition: Option<Condition>,
) -> Result<HypothesisSet> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut header_name = None;
    let mut header_condition = None;
    let mut hypotheses = IndexMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| parse_err(lineno, "expected a JSON object".into()))?;
        let string_field = |key: &str| -> Result<Option<String>> {
            match obj.get(key) {
                None | Some(Value::Null) => Ok(None),
                Some(Value::String(s)) => Ok(Some(s.clone())),
                Some(_) => Err(parse_err(lineno, format!("field `{key}` must be a string"))),
            }
        };
        let Some(id) = string_field("id")? else {
            if hypotheses.is_empty() && (obj.contains_key("system_name") || obj.contains_key("condition")) {
                header_name = string_field("system_name")?;
                header_condition = string_field("condition")?
                    .map(|c| c.parse::<Condition>())
                    .transpose()
                    .map_err(|e| parse_err(lineno, e.to_string()))?;
                continue;
            }
            return Err(Error::MissingField {
                path: origin.to_string(),
                line: lineno,
                field: "id",
            });
        };
        let hyp = string_field("hyp")?.ok_or(Error::MissingField {
            path: origin.to_string(),
            line: lineno,
            field: "hyp",
        })?;
        if !corpus.contains(&id) {
            return Err(Error::UnknownId(id));
        }
        if hypotheses.insert(id.clone(), hyp).is_some() {
            return Err(Error::DuplicateId(id));
        }
    }
    Ok(HypothesisSet {
        system_name: system_name
            .map(str::to_string)
            .or(header_name)
            .unwrap_or_else(|| "system".to_string()),
        condition: condition.or(header_condition),
        hypotheses,
    })
}

pub fn write_hypotheses(path: impl AsRef<Path>, set: &HypothesisSet) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut header = serde_json::Map::new();
    header.insert("system_name".into(), Value::String(set.system_name.clone()));
    if let Some(c) = set.condition {
        header.insert("condition".into(), Value::String(c.to_string()));
    }
    writeln!(w, "{}", Value::Object(header)).map_err(|e| Error::io(path, e))?;
    for (id, hyp) in &set.hypotheses {
        let line = serde_json::json!({ "id": id, "hyp": hyp });
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Whitespace-separated tokens with no empty or whitespace-bearing entries.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if let Some(bad) = tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(Error::InvalidInput(format!("invalid token {bad:?}")));
        }
        Ok(Self(tokens))
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.join())
    }
}

fn edge_punctuation() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\p{P}+|\p{P}+$").expect("valid punctuation pattern"))
}

/// Splits on Unicode whitespace and strips punctuation (general category P)
/// from both ends of every token. Case is preserved.
pub fn tokenize(sentence: &str) -> TokenSequence {
    let re = edge_punctuation();
    TokenSequence(
        sentence
            .split_whitespace()
            .map(|t| re.replace_all(t, "").into_owned())
            .filter(|t| !t.is_empty())
            .collect(),
    )
}

pub type Ngram<'a> = &'a [String];

/// All contiguous windows of length `n`, in order.
pub fn ngrams(seq: &TokenSequence, n: usize) -> Result<Vec<Ngram<'_>>> {
    if n == 0 {
        return Err(Error::InvalidInput("n-gram order must be at least 1".into()));
    }
    Ok(seq.0.windows(n).collect())
}

/// Multiset view of [`ngrams`].
pub fn ngram_counts(seq: &TokenSequence, n: usize) -> Result<HashMap<Ngram<'_>, usize>> {
    let mut counts = HashMap::new();
    for g in ngrams(seq, n)? {
        *counts.entry(g).or_insert(0) += 1;
    }
    Ok(counts)
}
