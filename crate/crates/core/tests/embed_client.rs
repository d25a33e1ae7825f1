use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use semeval_core::semantic::*;
use serde_json::{json, Value};

const DIM: usize = 8;

/// Deterministic bag-of-words embedding shared by the fake service and the
/// "offline export" path.
fn embed(text: &str) -> Vec<f64> {
    let mut v = vec![0.0; DIM];
    for w in text.split_whitespace() {
        let h = w.bytes().fold(2166136261u32, |h, b| (h ^ b as u32).wrapping_mul(16777619));
        v[(h as usize) % DIM] += 1.0;
        v[(h as usize >> 8) % DIM] += 0.5;
    }
    v[0] += 0.1;
    v
}

#[derive(Default)]
struct Script {
    /// Number of leading embed requests answered with 503.
    fail_first: usize,
    /// Answer every embed request with this status and body.
    always: Option<(u16, String)>,
    /// Drop one vector from each response.
    short: bool,
}

struct FakeService {
    url: String,
    batches: Arc<Mutex<Vec<Vec<String>>>>,
    hits: Arc<AtomicUsize>,
}

fn read_request(stream: &mut TcpStream) -> Option<(String, String, Vec<u8>)> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    let mut parts = line.split_whitespace();
    let method = parts.next()?.to_string();
    let path = parts.next()?.to_string();
    let mut len = 0;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).ok()?;
        let h = h.trim_end();
        if h.is_empty() {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().ok()?;
            }
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).ok()?;
    Some((method, path, body))
}

fn respond(stream: &mut TcpStream, status: u16, body: &str) {
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        503 => "Service Unavailable",
        _ => "Status",
    };
    let msg = format!(
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let _ = stream.write_all(msg.as_bytes());
}

fn spawn(script: Script) -> FakeService {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let batches = Arc::new(Mutex::new(Vec::new()));
    let hits = Arc::new(AtomicUsize::new(0));
    let (b, h) = (batches.clone(), hits.clone());
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let Some((method, path, body)) = read_request(&mut stream) else { continue };
            match (method.as_str(), path.as_str()) {
                ("GET", "/v1/health") => {
                    respond(&mut stream, 200, &json!({"status": "ok", "model": "fake-bow", "dim": DIM}).to_string());
                }
                ("POST", "/v1/embed") => {
                    let n = h.fetch_add(1, Ordering::SeqCst);
                    if let Some((status, text)) = &script.always {
                        respond(&mut stream, *status, text);
                        continue;
                    }
                    if n < script.fail_first {
                        respond(&mut stream, 503, "{\"error\": \"warming up\"}");
                        continue;
                    }
                    let req: Value = serde_json::from_slice(&body).unwrap();
                    let texts: Vec<String> = serde_json::from_value(req["texts"].clone()).unwrap();
                    let normalize = req["normalize"].as_bool().unwrap_or(false);
                    b.lock().unwrap().push(texts.clone());
                    let mut vectors: Vec<Vec<f64>> = texts
                        .iter()
                        .map(|t| {
                            let v = embed(t);
                            if normalize {
                                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                                v.iter().map(|x| x / n).collect()
                            } else {
                                v
                            }
                        })
                        .collect();
                    if script.short {
                        vectors.pop();
                    }
                    respond(
                        &mut stream,
                        200,
                        &json!({"model": "fake-bow", "dim": DIM, "vectors": vectors}).to_string(),
                    );
                }
                _ => respond(&mut stream, 404, "{}"),
            }
        }
    });
    FakeService { url, batches, hits }
}

fn sentences(n: usize) -> (Vec<String>, Vec<String>) {
    let ids = (0..n).map(|i| format!("id{i}")).collect();
    let texts = (0..n)
        .map(|i| format!("sentence number {i} talks about topic {} and word{}", i % 7, i * 3))
        .collect();
    (ids, texts)
}

fn client(url: &str, batch: usize) -> EmbeddingClient {
    EmbeddingClient::new(url, batch).unwrap().with_backoff(Duration::from_millis(5))
}

#[test]
fn health_reports_model() {
    let svc = spawn(Script::default());
    let h = client(&svc.url, 4).health().unwrap();
    assert_eq!(h.status, "ok");
    assert_eq!(h.model, "fake-bow");
    assert_eq!(h.dim, DIM);
}

#[test]
fn batches_preserve_order() {
    let svc = spawn(Script::default());
    let (ids, texts) = sentences(23);
    let got = client(&svc.url, 5).fetch_embeddings(ids.clone(), &texts).unwrap();
    assert_eq!(got.requests, 5);
    assert_eq!(got.model.as_deref(), Some("fake-bow"));
    assert_eq!(got.embeddings.ids(), ids.as_slice());
    let sizes: Vec<usize> = svc.batches.lock().unwrap().iter().map(Vec::len).collect();
    assert_eq!(sizes, vec![5, 5, 5, 5, 3]);
    let flat: Vec<String> = svc.batches.lock().unwrap().concat();
    assert_eq!(flat, texts);
    for (i, t) in texts.iter().enumerate() {
        assert_eq!(got.embeddings.row(i), embed(t).as_slice());
    }
}

#[test]
fn normalize_flag_gives_unit_vectors() {
    let svc = spawn(Script::default());
    let (ids, texts) = sentences(6);
    let got = client(&svc.url, 4).with_normalize(true).fetch_embeddings(ids, &texts).unwrap();
    for i in 0..6 {
        let n: f64 = got.embeddings.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-4);
    }
}

#[test]
fn empty_input_makes_no_request() {
    let svc = spawn(Script::default());
    let got = client(&svc.url, 4).fetch_embeddings(Vec::new(), &[]).unwrap();
    assert_eq!(got.requests, 0);
    assert!(got.embeddings.is_empty());
    assert_eq!(svc.hits.load(Ordering::SeqCst), 0);
}

#[test]
fn transient_errors_are_retried() {
    let svc = spawn(Script {
        fail_first: 2,
        ..Script::default()
    });
    let (ids, texts) = sentences(3);
    let got = client(&svc.url, 8).fetch_embeddings(ids, &texts).unwrap();
    assert_eq!(got.requests, 3);
    assert_eq!(got.embeddings.len(), 3);
}

#[test]
fn gives_up_after_three_attempts() {
    let svc = spawn(Script {
        fail_first: usize::MAX,
        ..Script::default()
    });
    let (ids, texts) = sentences(2);
    let err = client(&svc.url, 8).fetch_embeddings(ids, &texts).unwrap_err();
    assert_eq!(svc.hits.load(Ordering::SeqCst), 3);
    assert!(err.to_string().contains("503"), "{err}");
}

#[test]
fn client_errors_surface_body_without_retry() {
    let svc = spawn(Script {
        always: Some((400, "{\"error\": \"text too long\"}".into())),
        ..Script::default()
    });
    let (ids, texts) = sentences(2);
    let err = client(&svc.url, 8).fetch_embeddings(ids, &texts).unwrap_err();
    assert_eq!(svc.hits.load(Ordering::SeqCst), 1);
    let msg = err.to_string();
    assert!(msg.contains("400") && msg.contains("text too long"), "{msg}");
}

#[test]
fn count_mismatch_is_an_error() {
    let svc = spawn(Script {
        short: true,
        ..Script::default()
    });
    let (ids, texts) = sentences(4);
    assert!(client(&svc.url, 8).fetch_embeddings(ids, &texts).is_err());
}

#[test]
fn unreachable_endpoint_fails() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    drop(listener);
    assert!(client(&url, 2).health().is_err());
}

#[test]
fn service_matches_offline_file() {
    let svc = spawn(Script::default());
    let (ids, texts) = sentences(100);
    let live = client(&svc.url, 16).fetch_embeddings(ids.clone(), &texts).unwrap().embeddings;

    let rows: Vec<Vec<f64>> = texts.iter().map(|t| embed(t)).collect();
    let offline = EmbeddingMatrix::from_rows(ids, &rows).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("offline.semb");
    save_embeddings(&path, &offline, EmbeddingFormat::Binary).unwrap();
    let loaded = load_embeddings(&path, EmbeddingFormat::Binary).unwrap();

    assert_eq!(loaded.ids(), live.ids());
    for i in 0..live.len() {
        assert!(cosine_similarity(live.row(i), loaded.row(i)).unwrap() >= 0.999);
    }
}
