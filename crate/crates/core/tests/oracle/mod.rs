//! Brute-force reference implementations used only by tests.
//!
//! Everything here works on plain `Vec<String>` token lists with linear
//! scans, so it shares no code path with the library.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;

pub type Toks = Vec<String>;

pub fn toks(s: &str) -> Toks {
    s.split(' ').filter(|t| !t.is_empty()).map(str::to_string).collect()
}

pub fn grams(t: &[String], n: usize) -> Vec<Vec<String>> {
    if t.len() < n {
        return Vec::new();
    }
    (0..=t.len() - n).map(|i| t[i..i + n].to_vec()).collect()
}

fn occurrences(list: &[Vec<String>], g: &[String]) -> u64 {
    list.iter().filter(|x| x.as_slice() == g).count() as u64
}

fn distinct(list: Vec<Vec<String>>) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = Vec::new();
    for g in list {
        if !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleStats {
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub hyp_len: u64,
    pub ref_len: u64,
}

pub fn stats(hyp: &[String], refs: &[Toks], order: usize) -> OracleStats {
    let mut matches = Vec::new();
    let mut totals = Vec::new();
    for n in 1..=order {
        let hg = grams(hyp, n);
        let mut m = 0;
        for g in distinct(hg.clone()) {
            let c = occurrences(&hg, &g);
            let mut best = 0;
            for r in refs {
                best = best.max(occurrences(&grams(r, n), &g));
            }
            m += c.min(best);
        }
        matches.push(m);
        totals.push(hg.len() as u64);
    }
    let c = hyp.len() as i64;
    let mut best_len = refs[0].len() as i64;
    for r in refs {
        let l = r.len() as i64;
        let d = (l - c).abs();
        let bd = (best_len - c).abs();
        if d < bd || (d == bd && l < best_len) {
            best_len = l;
        }
    }
    OracleStats {
        matches,
        totals,
        hyp_len: hyp.len() as u64,
        ref_len: best_len as u64,
    }
}

/// `eps = None` means no smoothing.
pub fn score(s: &OracleStats, eps: Option<f64>) -> f64 {
    if s.hyp_len == 0 {
        return 0.0;
    }
    let order = s.matches.len();
    let mut prod = 1.0;
    for k in 0..order {
        let p = if s.matches[k] == 0 {
            match eps {
                None => return 0.0,
                Some(e) => e / (s.totals[k].max(1)) as f64,
            }
        } else {
            s.matches[k] as f64 / s.totals[k] as f64
        };
        prod *= p;
    }
    let c = s.hyp_len as f64;
    let r = s.ref_len as f64;
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    bp * prod.powf(1.0 / order as f64)
}

pub fn sentence_bleu(hyp: &[String], refs: &[Toks], order: usize, eps: Option<f64>) -> f64 {
    score(&stats(hyp, refs, order), eps)
}

pub fn corpus_bleu(pairs: &[(Toks, Vec<Toks>)], order: usize, eps: Option<f64>) -> f64 {
    let mut acc = OracleStats {
        matches: vec![0; order],
        totals: vec![0; order],
        hyp_len: 0,
        ref_len: 0,
    };
    for (h, rs) in pairs {
        let s = stats(h, rs, order);
        for k in 0..order {
            acc.matches[k] += s.matches[k];
            acc.totals[k] += s.totals[k];
        }
        acc.hyp_len += s.hyp_len;
        acc.ref_len += s.ref_len;
    }
    score(&acc, eps)
}

pub fn self_bleu(hyps: &[Toks], order: usize, eps: Option<f64>) -> f64 {
    let mut total = 0.0;
    for i in 0..hyps.len() {
        let others: Vec<Toks> = hyps.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, h)| h.clone()).collect();
        total += sentence_bleu(&hyps[i], &others, order, eps);
    }
    total / hyps.len() as f64
}

pub fn dist(hyps: &[Toks], n: usize, per_ngram: bool) -> f64 {
    let mut all = Vec::new();
    let mut tokens = 0;
    for h in hyps {
        all.extend(grams(h, n));
        tokens += h.len();
    }
    let denom = if per_ngram { all.len() } else { tokens };
    distinct(all).len() as f64 / denom as f64
}

pub fn head_entropy(hyps: &[Toks]) -> (f64, usize) {
    let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut skipped = 0;
    for h in hyps {
        if h.len() < 2 {
            skipped += 1;
        } else {
            *counts.entry((h[0].clone(), h[1].clone())).or_default() += 1;
        }
    }
    let total: usize = counts.values().sum();
    let mut e = 0.0;
    for &c in counts.values() {
        let p = c as f64 / total as f64;
        e -= p * p.log2();
    }
    (e, skipped)
}

/// (matched, total) reference content-token occurrences.
pub fn recall_counts(hyp: &[String], reference: &[String], stop: &[&str]) -> (usize, usize) {
    let hyp_lower: Vec<String> = hyp.iter().map(|t| t.to_lowercase()).collect();
    let mut matched = 0;
    let mut total = 0;
    for t in reference {
        let w = t.to_lowercase();
        if stop.contains(&w.as_str()) {
            continue;
        }
        total += 1;
        if hyp_lower.contains(&w) {
            matched += 1;
        }
    }
    (matched, total)
}

pub fn content_recall_micro(pairs: &[(Toks, Toks)], stop: &[&str]) -> Option<f64> {
    let (mut m, mut t) = (0, 0);
    for (h, r) in pairs {
        let (a, b) = recall_counts(h, r, stop);
        m += a;
        t += b;
    }
    (t > 0).then(|| m as f64 / t as f64)
}

pub fn content_recall_macro(pairs: &[(Toks, Toks)], stop: &[&str]) -> Option<f64> {
    let rs: Vec<f64> = pairs
        .iter()
        .filter_map(|(h, r)| {
            let (a, b) = recall_counts(h, r, stop);
            (b > 0).then(|| a as f64 / b as f64)
        })
        .collect();
    (!rs.is_empty()).then(|| rs.iter().sum::<f64>() / rs.len() as f64)
}

/// Random sentence over a small vocabulary; mixed case so lowercasing matters.
pub fn random_sentence(rng: &mut impl Rng, max_len: usize, vocab: usize) -> Toks {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| {
            let w = rng.gen_range(0..vocab);
            match w {
                0 => "the".to_string(),
                1 => "The".to_string(),
                2 => "of".to_string(),
                3 => "was".to_string(),
                _ => format!("w{w}"),
            }
        })
        .collect()
}

pub fn random_corpus(rng: &mut impl Rng, max_sents: usize, max_len: usize, vocab: usize) -> Vec<Toks> {
    let n = rng.gen_range(1..=max_sents);
    (0..n).map(|_| random_sentence(rng, max_len, vocab)).collect()
}

// Dense linear algebra, written out loop by loop.

pub type Mat = Vec<Vec<f64>>;

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let k = b.len();
    let m = b[0].len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for t in 0..k {
                s += a[i][t] * b[t][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// Naive cross-attention: returns (output, weights).
pub fn attention(h: &Mat, global: &[f64], seq: &Mat, w_proj: &Mat, w_q: &Mat, w_k: &Mat, w_v: &Mat) -> (Mat, Mat) {
    let mut mem = vec![global.to_vec()];
    mem.extend(seq.iter().cloned());
    let proj = matmul(&mem, w_proj);
    let q = matmul(h, w_q);
    let k = matmul(&proj, w_k);
    let v = matmul(&proj, w_v);
    let dk = w_q[0].len() as f64;
    let mut weights = Vec::new();
    for qi in &q {
        let logits: Vec<f64> = k.iter().map(|kj| qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() / dk.sqrt()).collect();
        let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ex: Vec<f64> = logits.iter().map(|l| (l - mx).exp()).collect();
        let z: f64 = ex.iter().sum();
        weights.push(ex.iter().map(|e| e / z).collect::<Vec<f64>>());
    }
    (matmul(&weights, &v), weights)
}

/// Two-pass sample covariance with divisor n − 1.
pub fn covariance(rows: &Mat) -> (Vec<f64>, Mat) {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            mean[j] += r[j] / n;
        }
    }
    let mut cov = vec![vec![0.0; d]; d];
    for a in 0..d {
        for b in 0..d {
            let mut s = 0.0;
            for r in rows {
                s += (r[a] - mean[a]) * (r[b] - mean[b]);
            }
            cov[a][b] = s / (n - 1.0);
        }
    }
    (mean, cov)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    d / (na * nb)
}

/// All k-subsets of `items`.
pub fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    for mut s in subsets(&items[1..], k - 1) {
        s.insert(0, items[0]);
        out.push(s);
    }
    out.extend(subsets(&items[1..], k));
    out
}

/// Exact expected N-way accuracy: every negative subset equally likely.
pub fn expected_retrieval_accuracy(sims: &Mat, n_way: usize) -> f64 {
    let m = sims.len();
    let mut total = 0.0;
    for i in 0..m {
        let others: Vec<usize> = (0..m).filter(|&j| j != i).collect();
        let all = subsets(&others, n_way - 1);
        let wins = all.iter().filter(|s| s.iter().all(|&j| sims[i][i] > sims[i][j])).count();
        total += wins as f64 / all.len() as f64;
    }
    total / m as f64
}

/// Median by sorting.
pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}
