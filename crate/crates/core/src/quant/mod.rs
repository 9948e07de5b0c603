//! Layer-adaptive quantization: distribution-aware weight quantizer, PACT
//! activation clipping, precision sensitivity and plan assignment.

mod adaptive;
mod pact;
mod plan;
mod sensitivity;
mod tensor;

pub use adaptive::{compute_scale, fake_quantize, fit_params, percentile, quantize_adaptive, Quantized, Scale};
pub use pact::{pact, pact_forward, pact_gradients, pact_quantize, pact_quantize_scalar, PactGradients};
pub use plan::{
    assign_bit_widths, assign_precisions, default_format, rank_percentiles, LayerPlan, PolicyConfig, QuantPlan,
};
pub use sensitivity::{calibrate_layer, layer_sensitivity, LayerSensitivity};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum QuantError {
    #[error("empty tensor")]
    EmptyTensor,
    #[error("unsupported bit-width {0}; expected 4, 8 or 16")]
    BitWidth(u32),
    #[error("invalid quantizer parameters: {0}")]
    InvalidParams(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("tensor file: {0}")]
    TensorFile(String),
    #[error("plan: {0}")]
    Plan(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Quantizer parameters: width `n`, saturation thresholds `[w_l, w_h]` on
/// `W / scale_k`, and the scale `scale_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantParams {
    pub n: u32,
    pub w_l: f64,
    pub w_h: f64,
    pub scale_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PactParams {
    pub alpha: f64,
    pub n: u32,
}

/// How the saturation thresholds are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    /// Percentiles (0..100) of the normalized weights.
    Percentile { low: f64, high: f64 },
    /// Fixed `[-1, 1]`.
    Symmetric,
}

impl Default for ThresholdMode {
    fn default() -> Self {
        ThresholdMode::Percentile { low: 0.5, high: 99.5 }
    }
}
