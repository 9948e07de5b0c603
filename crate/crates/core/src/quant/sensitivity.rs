//! Per-layer precision sensitivity.

use super::{fake_quantize, fit_params, QuantError, QuantParams, Tensor, ThresholdMode};

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSensitivity {
    pub layer_id: usize,
    pub s_sc8: f64,
    pub s_sc4: f64,
    /// `max(s_sc8, s_sc4)`.
    pub s_l: f64,
    pub n_l: usize,
    pub grad_norm: f64,
}

fn error_norm(w: &Tensor, p: &QuantParams) -> Result<f64, QuantError> {
    let q = fake_quantize(w, p)?;
    Ok(q.data().iter().zip(w.data()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// `s_k = (||Q(w) - w|| - ||Q'_k(w) - w||) * ||grad|| / n_l` for the two
/// candidate quantizers (8- and 4-bit), with L2 norms; `s_l` is the larger.
pub fn layer_sensitivity(
    layer_id: usize,
    w: &Tensor,
    grad: &Tensor,
    current: &QuantParams,
    candidate_8: &QuantParams,
    candidate_4: &QuantParams,
) -> Result<LayerSensitivity, QuantError> {
    if w.shape() != grad.shape() {
        return Err(QuantError::Shape(format!("weights {:?} vs gradient {:?}", w.shape(), grad.shape())));
    }
    let n_l = w.len();
    if n_l == 0 {
        return Err(QuantError::EmptyTensor);
    }
    let grad_norm = grad.l2_norm();
    let base = error_norm(w, current)?;
    let s = |cand: &QuantParams| -> Result<f64, QuantError> {
        Ok((base - error_norm(w, cand)?) * grad_norm / n_l as f64)
    };
    let s_sc8 = s(candidate_8)?;
    let s_sc4 = s(candidate_4)?;
    Ok(LayerSensitivity { layer_id, s_sc8, s_sc4, s_l: s_sc8.max(s_sc4), n_l, grad_norm })
}

/// Sensitivity with the 4-bit fitted quantizer as the current one and
/// freshly fitted 8- and 4-bit candidates.
pub fn calibrate_layer(
    layer_id: usize,
    w: &Tensor,
    grad: &Tensor,
    mode: ThresholdMode,
) -> Result<LayerSensitivity, QuantError> {
    let (q4, _) = fit_params(w, 4, mode)?;
    let (q8, _) = fit_params(w, 8, mode)?;
    layer_sensitivity(layer_id, w, grad, &q4, &q8, &q4)
}
