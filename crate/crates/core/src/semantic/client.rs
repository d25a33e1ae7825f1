//! Blocking client for the sentence-embedding sidecar.
//!
//! Wire protocol:
//! `POST /v1/embed {"texts": [...], "normalize": bool}` →
//! `{"model": str, "dim": int, "vectors": [[...]]}` and
//! `GET /v1/health` → `{"status": "ok", "model": str, "dim": int}`.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::semantic::EmbeddingMatrix;

pub const ENDPOINT_ENV: &str = "SEMEVAL_EMBED_ENDPOINT";

#[derive(Debug, Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
    normalize: bool,
}

#[derive(Debug, Deserialize)]
struct EmbedResponse {
    model: String,
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Health {
    pub status: String,
    pub model: String,
    pub dim: usize,
}

#[derive(Debug, Clone)]
pub struct EmbeddingClient {
    endpoint: String,
    batch_size: usize,
    normalize: bool,
    max_attempts: u32,
    initial_backoff: Duration,
    agent: ureq::Agent,
}

/// Result of a fetch: the embeddings and the model id the service reported.
#[derive(Debug, Clone)]
pub struct FetchedEmbeddings {
    pub model: Option<String>,
    pub embeddings: EmbeddingMatrix<f64>,
    pub requests: usize,
}

enum Attempt<T> {
    Done(T),
    Transient(String),
}

impl EmbeddingClient {
    pub fn new(endpoint: impl Into<String>, batch_size: usize) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::InvalidInput("batch size must be positive".into()));
        }
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .new_agent();
        Ok(Self {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            batch_size,
            normalize: false,
            max_attempts: 3,
            initial_backoff: Duration::from_millis(200),
            agent,
        })
    }

    pub fn with_normalize(mut self, normalize: bool) -> Self {
        self.normalize = normalize;
        self
    }

    /// Delay before the second attempt; doubled for each later one.
    pub fn with_backoff(mut self, initial: Duration) -> Self {
        self.initial_backoff = initial;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn health(&self) -> Result<Health> {
        let url = format!("{}/v1/health", self.endpoint);
        self.with_retries(|| {
            let resp = match self.agent.get(&url).call() {
                Ok(r) => r,
                Err(e) => return Ok(Attempt::Transient(e.to_string())),
            };
            self.decode(resp)
        })
    }

    /// Embeds `texts` in batches, preserving order; row `i` gets id `ids[i]`.
    pub fn fetch_embeddings(&self, ids: Vec<String>, texts: &[String]) -> Result<FetchedEmbeddings> {
        if ids.len() != texts.len() {
            return Err(Error::InvalidInput(format!(
                "{} ids for {} texts",
                ids.len(),
                texts.len()
            )));
        }
        if texts.is_empty() {
            return Ok(FetchedEmbeddings {
                model: None,
                embeddings: EmbeddingMatrix::empty(0),
                requests: 0,
            });
        }
        let url = format!("{}/v1/embed", self.endpoint);
        let mut model: Option<String> = None;
        let mut dim: Option<usize> = None;
        let mut data = Vec::new();
        let mut requests = 0;
        for batch in texts.chunks(self.batch_size) {
            let body = EmbedRequest {
                texts: batch,
                normalize: self.normalize,
            };
            let resp: EmbedResponse = self.with_retries(|| {
                requests += 1;
                let resp = match self.agent.post(&url).send_json(&body) {
                    Ok(r) => r,
                    Err(e) => return Ok(Attempt::Transient(e.to_string())),
                };
                self.decode(resp)
            })?;
            if resp.vectors.len() != batch.len() {
                return Err(Error::Service(format!(
                    "sent {} texts, received {} vectors",
                    batch.len(),
                    resp.vectors.len()
                )));
            }
            match dim {
                Some(d) if d != resp.dim => {
                    return Err(Error::Service(format!(
                        "dimension changed between batches: {d} then {}",
                        resp.dim
                    )))
                }
                _ => dim = Some(resp.dim),
            }
            if let Some(bad) = resp.vectors.iter().position(|v| v.len() != resp.dim) {
                return Err(Error::Service(format!(
                    "vector {bad} has length {}, service reported dim {}",
                    resp.vectors[bad].len(),
                    resp.dim
                )));
            }
            if model.is_none() {
                model = Some(resp.model);
            }
            for v in resp.vectors {
                data.extend(v);
            }
        }
        let dim = dim.unwrap_or(0);
        let embeddings = EmbeddingMatrix::new(ids, Matrix::from_vec(texts.len(), dim, data)?)?;
        Ok(FetchedEmbeddings {
            model,
            embeddings,
            requests,
        })
    }

    fn decode<T: for<'de> Deserialize<'de>>(&self, mut resp: ureq::http::Response<ureq::Body>) -> Result<Attempt<T>> {
        let status = resp.status();
        if status.is_success() {
            return resp
                .body_mut()
                .read_json::<T>()
                .map(Attempt::Done)
                .map_err(|e| Error::Service(format!("malformed response: {e}")));
        }
        let body = resp.body_mut().read_to_string().unwrap_or_default();
        let message = format!("HTTP {}: {}", status.as_u16(), body.trim());
        if status.is_server_error() || status.as_u16() == 429 {
            Ok(Attempt::Transient(message))
        } else {
            Err(Error::Service(message))
        }
    }

    fn with_retries<T>(&self, mut f: impl FnMut() -> Result<Attempt<T>>) -> Result<T> {
        let mut delay = self.initial_backoff;
        let mut last = String::new();
        for attempt in 0..self.max_attempts {
            if attempt > 0 {
                thread::sleep(delay);
                delay *= 2;
            }
            match f()? {
                Attempt::Done(v) => return Ok(v),
                Attempt::Transient(msg) => last = msg,
            }
        }
        Err(Error::Service(format!(
            "{} failed after {} attempts: {last}",
            self.endpoint, self.max_attempts
        )))
    }
}
