//! Evaluation toolkit for decoded text: n-gram and diversity metrics,
//! embedding-space retrieval and Fréchet distance, a reference cross-attention
//! forward/backward pass, and table-shaped analysis pipelines.
//!
//! Numeric cores are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision for common uses.

pub mod corpus;
pub mod error;
pub mod linalg;
pub mod mechanism;
pub mod metrics;
pub mod protocol;
pub mod scalar;
pub mod selftest;
pub mod semantic;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type EmbeddingMatrix64 = semantic::EmbeddingMatrix<f64>;
pub type EmbeddingMatrix32 = semantic::EmbeddingMatrix<f32>;
pub type GaussianSummary64 = semantic::GaussianSummary<f64>;
pub type GaussianSummary32 = semantic::GaussianSummary<f32>;
pub type AttentionParams64 = mechanism::AttentionParams<f64>;
pub type AttentionParams32 = mechanism::AttentionParams<f32>;
pub type NeuralMemory64 = mechanism::NeuralMemory<f64>;
pub type NeuralMemory32 = mechanism::NeuralMemory<f32>;
