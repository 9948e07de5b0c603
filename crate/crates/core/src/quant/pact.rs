//! Parameterized clipping activation (PACT) and its straight-through
//! gradients.

use super::{PactParams, QuantError, Tensor};

/// `0.5 * (|x| - |x - alpha| + alpha)`, i.e. `clip(x, 0, alpha)`.
///
/// Evaluated through the clip form, which is algebraically identical and
/// free of cancellation error.
pub fn pact(x: f64, alpha: f64) -> f64 {
    x.max(0.0).min(alpha)
}

pub fn pact_forward(x: &Tensor, p: &PactParams) -> Tensor {
    x.map(|v| pact(v, p.alpha))
}

/// Uniform `2^n`-level quantization of a clipped value `y` in `[0, alpha]`.
pub fn pact_quantize_scalar(y: f64, alpha: f64, n: u32) -> f64 {
    let levels = ((1u64 << n) - 1) as f64;
    let code = (y * levels / alpha).round();
    // `alpha * (code / levels)` keeps both endpoints exact.
    alpha * (code / levels)
}

pub fn pact_quantize(y: &Tensor, p: &PactParams) -> Tensor {
    y.map(|v| pact_quantize_scalar(v, p.alpha, p.n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PactGradients {
    pub dx: Tensor,
    pub dalpha: f64,
}

/// `dx = up * 1[0 <= x <= alpha]`, `dalpha = sum(up * 1[x >= alpha])`.
/// Quantization is passed straight through inside the clip region.
pub fn pact_gradients(x: &Tensor, alpha: f64, upstream: &Tensor) -> Result<PactGradients, QuantError> {
    if x.shape() != upstream.shape() {
        return Err(QuantError::Shape(format!("x {:?} vs upstream {:?}", x.shape(), upstream.shape())));
    }
    let mut dalpha = 0.0;
    let dx = x
        .data()
        .iter()
        .zip(upstream.data())
        .map(|(&v, &u)| {
            if v >= alpha {
                dalpha += u;
            }
            if (0.0..=alpha).contains(&v) {
                u
            } else {
                0.0
            }
        })
        .collect();
    Ok(PactGradients { dx: Tensor::new(x.shape().to_vec(), dx)?, dalpha })
}
