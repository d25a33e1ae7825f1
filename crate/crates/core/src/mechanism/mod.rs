//! Toy-scale reference of the attribute prompt, the text-queries-neural-memory
//! cross-attention and the stage-one loss composition.

pub mod attention;
pub mod gradcheck;
pub mod loss;
pub mod prompt;

pub use attention::{
    attention_input_gradient, qkv_cross_attention, AttentionGradients, AttentionOutput, AttentionParams, NeuralMemory,
};
pub use gradcheck::{check_attention_gradients, AttentionInstance, GradCheckReport};
pub use loss::{cross_entropy_loss, mse_loss, stage1_objective, LossTerms, LossWeights};
pub use prompt::{render_prompt, PredictedAttributes};
