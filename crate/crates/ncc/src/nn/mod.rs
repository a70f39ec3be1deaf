//! Minimal dense neural toolkit: matrix type, layers with hand-written
//! backward passes, loss, and the Adam optimizer. Everything is 64-bit
//! so finite-difference gradient checks are stable.

pub mod adam;
pub mod attention;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod matrix;

pub use adam::AdamState;
pub use attention::{SelfAttention, SelfAttentionGrad};
pub use layers::{gelu, gelu_backward, layer_norm, layer_norm_backward, softmax_rows, softmax_rows_backward, LayerNorm, LayerNormGrad, Linear, LinearGrad, Mlp, MlpCache, MlpGrad};
pub use loss::{bce_loss, bce_with_logits};
pub use matrix::DenseMatrix;
