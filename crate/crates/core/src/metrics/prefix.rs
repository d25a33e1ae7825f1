//! Removal of stock sentence openings such as "The movie" or "He was".

use std::fs;
use std::path::Path;

use serde::{Serialize, Serializer};

use crate::corpus::{tokenize, TokenSequence};
use crate::error::{Error, Result};

pub const DEFAULT_PREFIXES: [&str; 2] = ["The movie", "He was"];

/// Tokenized prefixes, longest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixList {
    prefixes: Vec<TokenSequence>,
}

impl PrefixList {
    pub fn new<I, S>(phrases: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut prefixes: Vec<TokenSequence> = phrases
            .into_iter()
            .map(|p| tokenize(p.as_ref()))
            .filter(|t| !t.is_empty())
            .collect();
        prefixes.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.tokens().cmp(b.tokens())));
        prefixes.dedup();
        Self { prefixes }
    }

    /// One phrase per line; blank lines and `#` comments are ignored.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        ))
    }

    pub fn prefixes(&self) -> &[TokenSequence] {
        &self.prefixes
    }

    pub fn is_empty(&self) -> bool {
        self.prefixes.is_empty()
    }
}

/// Serialized as the list of space-joined phrases.
impl Serialize for PrefixList {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let phrases: Vec<String> = self.prefixes.iter().map(TokenSequence::join).collect();
        phrases.serialize(s)
    }
}

impl Default for PrefixList {
    fn default() -> Self {
        Self::new(DEFAULT_PREFIXES)
    }
}

/// Drops the longest listed prefix `seq` starts with. Applied once.
pub fn strip_prefixes(seq: &TokenSequence, prefixes: &PrefixList) -> TokenSequence {
    for p in &prefixes.prefixes {
        if seq.tokens().starts_with(p.tokens()) {
            return TokenSequence::new(seq.tokens()[p.len()..].to_vec())
                .expect("suffix of a valid sequence is valid");
        }
    }
    seq.clone()
}
