//! Fixture files and a runner for the built binary.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use semeval_core::corpus::{write_corpus, write_hypotheses, Condition, Corpus};
use semeval_core::semantic::{save_embeddings, EmbeddingFormat};

#[path = "../../../core/tests/fixtures/mod.rs"]
pub mod fixtures;

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_semeval"));
    c.env_remove("SEMEVAL_EMBED_ENDPOINT");
    c
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Paths of one fixture set on disk.
pub struct Files {
    pub dir: tempfile::TempDir,
    pub corpus: Corpus,
    pub refs: PathBuf,
    pub hyps: PathBuf,
    pub noise: PathBuf,
    pub emb_refs: PathBuf,
    pub emb_hyps: PathBuf,
    pub emb_noise: PathBuf,
}

impl Files {
    pub fn p(&self, name: &str) -> String {
        self.dir.path().join(name).display().to_string()
    }
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// A 30-sentence corpus, a lightly edited real system, a gibberish noise
/// system, and hashed bag-of-words embeddings for all three.
pub fn write_files() -> Files {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixtures::corpus(30);
    let real = fixtures::hyps(&corpus, "sys", Some(Condition::Real), |i, s| {
        if i % 3 == 0 {
            s.ground_truth.clone()
        } else {
            let t: Vec<&str> = s.ground_truth.split_whitespace().collect();
            t[..t.len().saturating_sub(1).max(1)].join(" ")
        }
    });
    let noise = fixtures::hyps(&corpus, "sys", Some(Condition::Noise), |i, _| fixtures::gibberish(i));
    let path = |n: &str| dir.path().join(n);

    write_corpus(path("refs.jsonl"), corpus.samples()).unwrap();
    write_hypotheses(path("hyps.jsonl"), &real).unwrap();
    write_hypotheses(path("noise.jsonl"), &noise).unwrap();
    save_embeddings(path("refs.semb"), &fixtures::reference_embeddings(&corpus), EmbeddingFormat::Binary).unwrap();
    save_embeddings(path("hyps.semb"), &fixtures::hypothesis_embeddings(&real), EmbeddingFormat::Binary).unwrap();
    save_embeddings(path("noise.semb"), &fixtures::hypothesis_embeddings(&noise), EmbeddingFormat::Binary).unwrap();

    Files {
        refs: path("refs.jsonl"),
        hyps: path("hyps.jsonl"),
        noise: path("noise.jsonl"),
        emb_refs: path("refs.semb"),
        emb_hyps: path("hyps.semb"),
        emb_noise: path("noise.semb"),
        corpus,
        dir,
    }
}
