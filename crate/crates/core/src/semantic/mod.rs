//! Sentence-embedding space: ingestion, cosine retrieval and Fréchet distance.

pub mod client;
pub mod embeddings;
pub mod frechet;
pub mod retrieval;

pub use client::{EmbeddingClient, FetchedEmbeddings, Health, ENDPOINT_ENV};
pub use embeddings::{load_embeddings, save_embeddings, EmbeddingFormat, EmbeddingMatrix};
pub use frechet::{embedding_frechet_distance, fit_gaussian, frechet_distance, GaussianSummary};
pub use retrieval::{
    accuracy_from_similarities, cosine_similarity, nway_retrieval_accuracy, sample_negatives, similarity_matrix,
    RetrievalConfig, RetrievalResult,
};
