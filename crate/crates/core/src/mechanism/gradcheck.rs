//! Central finite-difference check of the attention gradients.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::Matrix;
use crate::mechanism::attention::{attention_input_gradient, qkv_cross_attention, AttentionParams, NeuralMemory};
use crate::scalar::lit;

/// One random attention problem.
#[derive(Debug, Clone)]
pub struct AttentionInstance {
    pub h_text: Matrix<f64>,
    pub memory: NeuralMemory<f64>,
    pub params: AttentionParams<f64>,
    pub upstream: Matrix<f64>,
}

impl AttentionInstance {
    pub fn random(rng: &mut impl Rng, t: usize, l: usize, d_model: usize, d_k: usize) -> Result<Self> {
        let mut draw = |r, c| Matrix::from_fn(r, c, |_, _| lit::<f64>(rng.gen_range(-1.0..1.0)));
        let h_text = draw(t, d_model);
        let global = draw(1, d_model).as_slice().to_vec();
        let sequence = draw(l, d_model);
        let upstream = draw(t, d_k);
        let memory = NeuralMemory::new(global, sequence)?;
        let params = AttentionParams::random(rng, d_model, d_k, 1.0)?;
        Ok(Self {
            h_text,
            memory,
            params,
            upstream,
        })
    }

    /// `⟨upstream, output⟩`
    pub fn objective(&self, h_text: &Matrix<f64>, memory: &NeuralMemory<f64>) -> Result<f64> {
        let out = qkv_cross_attention(h_text, memory, &self.params)?;
        Ok(out
            .output
            .as_slice()
            .iter()
            .zip(self.upstream.as_slice())
            .map(|(a, b)| a * b)
            .sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    /// Largest `|analytic − numeric| / max(|analytic|, |numeric|, 1e-8)`.
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
    pub entries_checked: usize,
}

/// Compares analytic gradients for every entry of `H_text`, the global
/// memory vector and the memory sequence against central differences.
pub fn check_attention_gradients(inst: &AttentionInstance, step: f64) -> Result<GradCheckReport> {
    let analytic = attention_input_gradient(&inst.h_text, &inst.memory, &inst.params, &inst.upstream)?;
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        max_absolute_error: 0.0,
        entries_checked: 0,
    };
    let mut record = |a: f64, n: f64| {
        let abs = (a - n).abs();
        let rel = abs / a.abs().max(n.abs()).max(1e-8);
        report.max_absolute_error = report.max_absolute_error.max(abs);
        report.max_relative_error = report.max_relative_error.max(rel);
        report.entries_checked += 1;
    };

    for idx in 0..inst.h_text.as_slice().len() {
        let mut plus = inst.h_text.clone();
        plus.as_mut_slice()[idx] += step;
        let mut minus = inst.h_text.clone();
        minus.as_mut_slice()[idx] -= step;
        let n = (inst.objective(&plus, &inst.memory)? - inst.objective(&minus, &inst.memory)?) / (2.0 * step);
        record(analytic.h_text.as_slice()[idx], n);
    }
    for idx in 0..inst.memory.global.len() {
        let mut plus = inst.memory.clone();
        plus.global[idx] += step;
        let mut minus = inst.memory.clone();
        minus.global[idx] -= step;
        let n = (inst.objective(&inst.h_text, &plus)? - inst.objective(&inst.h_text, &minus)?) / (2.0 * step);
        record(analytic.memory_global[idx], n);
    }
    for idx in 0..inst.memory.sequence.as_slice().len() {
        let mut plus = inst.memory.clone();
        plus.sequence.as_mut_slice()[idx] += step;
        let mut minus = inst.memory.clone();
        minus.sequence.as_mut_slice()[idx] -= step;
        let n = (inst.objective(&inst.h_text, &plus)? - inst.objective(&inst.h_text, &minus)?) / (2.0 * step);
        record(analytic.memory_sequence.as_slice()[idx], n);
    }
    Ok(report)
}
