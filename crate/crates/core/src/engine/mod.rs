//! Layer-adaptive execution simulator: runs a sequential network through the
//! MAC engine under a quantization plan, with CORDIC activations, a banked
//! memory model and quantization-aware training.

mod activation;
mod cordic;
mod digits;
mod exec;
mod memory;
mod model;
mod train;

pub use activation::{
    activation_apply, activation_derivative, activation_reference, activation_values, Activation, SELU_ALPHA,
    SELU_LAMBDA,
};
pub use cordic::{cordic_cosh_sinh, cordic_exp, cordic_sigmoid, cordic_tanh, DEFAULT_ITERATIONS, SIGMOID_SATURATION};
pub use digits::{generate_digits, Dataset, DIGIT_PIXELS, DIGIT_SIDE};
pub use exec::{reference_inference, run_inference, ExecConfig, ExecStats, Inference, LayerStats, PreparedModel};
pub use memory::MemoryModel;
pub use model::{init_mlp, LayerKind, LayerSpec, LayerWeights, ModelGraph, MANIFEST_FILE};
pub use train::{
    accuracy, calibrate_plan, cross_entropy, loss_and_gradients, train_epochs, train_step, Gradients, Schedule,
    TrainHyper,
};

use crate::formats::FormatError;
use crate::mac::MacError;
use crate::quant::QuantError;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("dimension mismatch: {0}")]
    Dim(String),
    #[error("plan does not match model: {0}")]
    Plan(String),
    #[error("model manifest: {0}")]
    Manifest(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Quant(#[from] QuantError),
    #[error(transparent)]
    Mac(#[from] MacError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
