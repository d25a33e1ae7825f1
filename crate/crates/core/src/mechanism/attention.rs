//! Single-head cross-attention where text hidden states query a neural
//! memory bank.
//!
//! The memory `M = [v; E]` stacks the pooled global vector on top of the
//! sequence embeddings, then
//!
//! ```text
//! Q = H W_Q    K = (M W_proj) W_K    V = (M W_proj) W_V
//! A = softmax_rows(Q Kᵀ / √d_k)      out = A V
//! ```

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{lit, Scalar};

/// Pooled global embedding plus `L ≥ 1` sequence embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralMemory<T> {
    pub global: Vec<T>,
    pub sequence: Matrix<T>,
}

impl<T: Scalar> NeuralMemory<T> {
    pub fn new(global: Vec<T>, sequence: Matrix<T>) -> Result<Self> {
        if sequence.rows() == 0 {
            return Err(Error::Shape("memory needs at least one sequence row".into()));
        }
        if global.len() != sequence.cols() {
            return Err(Error::Shape(format!(
                "global vector of length {} with sequence width {}",
                global.len(),
                sequence.cols()
            )));
        }
        if !global.iter().all(|v| v.is_finite()) || !sequence.is_finite() {
            return Err(Error::NonFinite("memory".into()));
        }
        Ok(Self { global, sequence })
    }

    pub fn len(&self) -> usize {
        self.sequence.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.rows() == 0
    }

    pub fn d_model(&self) -> usize {
        self.global.len()
    }

    /// `(L+1) × d_model` with the global vector in row 0.
    pub fn stacked(&self) -> Matrix<T> {
        let d = self.d_model();
        let mut data = Vec::with_capacity((self.len() + 1) * d);
        data.extend_from_slice(&self.global);
        data.extend_from_slice(self.sequence.as_slice());
        Matrix::from_vec(self.len() + 1, d, data).expect("stacked shape is consistent")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams<T> {
    /// `d_model × d_model`
    pub w_proj: Matrix<T>,
    /// `d_model × d_k`
    pub w_q: Matrix<T>,
    pub w_k: Matrix<T>,
    pub w_v: Matrix<T>,
}

impl<T: Scalar> AttentionParams<T> {
    pub fn new(w_proj: Matrix<T>, w_q: Matrix<T>, w_k: Matrix<T>, w_v: Matrix<T>) -> Result<Self> {
        let d = w_proj.rows();
        if !w_proj.is_square() || d == 0 {
            return Err(Error::Shape(format!(
                "W_proj must be square and non-empty, got {}x{}",
                w_proj.rows(),
                w_proj.cols()
            )));
        }
        let dk = w_q.cols();
        for (name, w) in [("W_Q", &w_q), ("W_K", &w_k), ("W_V", &w_v)] {
            if w.shape() != (d, dk) {
                return Err(Error::Shape(format!(
                    "{name} is {}x{}, expected {d}x{dk}",
                    w.rows(),
                    w.cols()
                )));
            }
        }
        if dk == 0 {
            return Err(Error::Shape("head dimension must be at least 1".into()));
        }
        for (name, w) in [("W_proj", &w_proj), ("W_Q", &w_q), ("W_K", &w_k), ("W_V", &w_v)] {
            if !w.is_finite() {
                return Err(Error::NonFinite(name.into()));
            }
        }
        Ok(Self { w_proj, w_q, w_k, w_v })
    }

    /// Entries drawn uniformly from `[-scale, scale]`.
    pub fn random(rng: &mut impl Rng, d_model: usize, d_k: usize, scale: f64) -> Result<Self> {
        let mut draw = |r, c| Matrix::from_fn(r, c, |_, _| lit::<T>(rng.gen_range(-scale..=scale)));
        let w_proj = draw(d_model, d_model);
        let w_q = draw(d_model, d_k);
        let w_k = draw(d_model, d_k);
        let w_v = draw(d_model, d_k);
        Self::new(w_proj, w_q, w_k, w_v)
    }

    pub fn d_model(&self) -> usize {
        self.w_proj.rows()
    }

    pub fn d_k(&self) -> usize {
        self.w_q.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput<T> {
    /// `T × d_k`
    pub output: Matrix<T>,
    /// `T × (L+1)`, column 0 is the global memory row.
    pub weights: Matrix<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionGradients<T> {
    pub h_text: Matrix<T>,
    pub memory_global: Vec<T>,
    pub memory_sequence: Matrix<T>,
}

struct Forward<T> {
    stacked: Matrix<T>,
    q: Matrix<T>,
    k: Matrix<T>,
    v: Matrix<T>,
    weights: Matrix<T>,
    output: Matrix<T>,
}

fn ensure_finite<T: Scalar>(m: &Matrix<T>, stage: &str) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(stage.into()))
    }
}

fn forward<T: Scalar>(h_text: &Matrix<T>, mem: &NeuralMemory<T>, p: &AttentionParams<T>) -> Result<Forward<T>> {
    if h_text.cols() != p.d_model() || mem.d_model() != p.d_model() {
        return Err(Error::Shape(format!(
            "H_text width {}, memory width {}, d_model {}",
            h_text.cols(),
            mem.d_model(),
            p.d_model()
        )));
    }
    ensure_finite(h_text, "H_text")?;
    let stacked = mem.stacked();
    ensure_finite(&stacked, "memory")?;

    let q = h_text.matmul(&p.w_q)?;
    ensure_finite(&q, "queries")?;
    let projected = stacked.matmul(&p.w_proj)?;
    ensure_finite(&projected, "projection")?;
    let k = projected.matmul(&p.w_k)?;
    ensure_finite(&k, "keys")?;
    let v = projected.matmul(&p.w_v)?;
    ensure_finite(&v, "values")?;

    let scale = T::one() / lit::<T>(p.d_k() as f64).sqrt();
    let mut weights = q.matmul(&k.transpose())?.scale(scale);
    ensure_finite(&weights, "logits")?;
    for i in 0..weights.rows() {
        softmax_in_place(weights.row_mut(i));
    }
    ensure_finite(&weights, "attention weights")?;
    let output = weights.matmul(&v)?;
    ensure_finite(&output, "output")?;
    Ok(Forward {
        stacked,
        q,
        k,
        v,
        weights,
        output,
    })
}

fn softmax_in_place<T: Scalar>(row: &mut [T]) {
    let max = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let mut total = T::zero();
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        total = total + *x;
    }
    for x in row.iter_mut() {
        *x = *x / total;
    }
}

pub fn qkv_cross_attention<T: Scalar>(
    h_text: &Matrix<T>,
    mem: &NeuralMemory<T>,
    p: &AttentionParams<T>,
) -> Result<AttentionOutput<T>> {
    let f = forward(h_text, mem, p)?;
    Ok(AttentionOutput {
        output: f.output,
        weights: f.weights,
    })
}

/// Reverse-mode gradients of `⟨upstream, output⟩` with respect to the text
/// hidden states and both parts of the memory.
pub fn attention_input_gradient<T: Scalar>(
    h_text: &Matrix<T>,
    mem: &NeuralMemory<T>,
    p: &AttentionParams<T>,
    upstream: &Matrix<T>,
) -> Result<AttentionGradients<T>> {
    let f = forward(h_text, mem, p)?;
    if upstream.shape() != f.output.shape() {
        return Err(Error::Shape(format!(
            "upstream is {}x{}, output is {}x{}",
            upstream.rows(),
            upstream.cols(),
            f.output.rows(),
            f.output.cols()
        )));
    }
    ensure_finite(upstream, "upstream")?;
    let scale = T::one() / lit::<T>(p.d_k() as f64).sqrt();

    let d_weights = upstream.matmul(&f.v.transpose())?;
    let d_v = f.weights.transpose().matmul(upstream)?;

    // Softmax backward, row by row.
    let mut d_logits = Matrix::zeros(d_weights.rows(), d_weights.cols());
    for i in 0..d_weights.rows() {
        let a = f.weights.row(i);
        let g = d_weights.row(i);
        let inner: T = a.iter().zip(g).map(|(&a, &g)| a * g).sum();
        for (j, out) in d_logits.row_mut(i).iter_mut().enumerate() {
            *out = a[j] * (g[j] - inner) * scale;
        }
    }

    let d_q = d_logits.matmul(&f.k)?;
    let d_k = d_logits.transpose().matmul(&f.q)?;
    let d_h = d_q.matmul(&p.w_q.transpose())?;
    let d_projected = d_k
        .matmul(&p.w_k.transpose())?
        .add(&d_v.matmul(&p.w_v.transpose())?)?;
    let d_stacked = d_projected.matmul(&p.w_proj.transpose())?;
    debug_assert_eq!(d_stacked.shape(), f.stacked.shape());

    let d = p.d_model();
    let memory_global = d_stacked.row(0).to_vec();
    let memory_sequence = Matrix::from_vec(mem.len(), d, d_stacked.as_slice()[d..].to_vec())?;
    Ok(AttentionGradients {
        h_text: d_h,
        memory_global,
        memory_sequence,
    })
}
