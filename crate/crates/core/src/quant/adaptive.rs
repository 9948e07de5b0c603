//! Distribution-aware weight quantization.

use super::{QuantError, QuantParams, Tensor, ThresholdMode};

/// Scale factor `mean(|W|) * (2^n - 1) / 2^(n-1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale {
    pub k: f64,
    /// All-zero tensor: `k` is forced to 1.
    pub degenerate: bool,
}

pub fn compute_scale(w: &Tensor, n: u32) -> Result<Scale, QuantError> {
    if w.is_empty() {
        return Err(QuantError::EmptyTensor);
    }
    let mean_abs = w.data().iter().map(|x| x.abs()).sum::<f64>() / w.len() as f64;
    if mean_abs == 0.0 {
        return Ok(Scale { k: 1.0, degenerate: true });
    }
    let levels = ((1u64 << n) - 1) as f64;
    let half = (1u64 << (n - 1)) as f64;
    Ok(Scale { k: mean_abs * levels / half, degenerate: false })
}

/// Linear-interpolated percentile (`q` in [0, 100]) of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * t
}

/// Fits `QuantParams` to a weight tensor.
///
/// Thresholds are taken on `W / k`. A collapsed range is widened to include
/// zero, and falls back to [-1, 1] when that is still empty.
pub fn fit_params(w: &Tensor, n: u32, mode: ThresholdMode) -> Result<(QuantParams, bool), QuantError> {
    check_width(n)?;
    let scale = compute_scale(w, n)?;
    let (mut lo, mut hi) = match mode {
        ThresholdMode::Symmetric => (-1.0, 1.0),
        ThresholdMode::Percentile { low, high } => {
            let mut v: Vec<f64> = w.data().iter().map(|x| x / scale.k).collect();
            v.sort_by(f64::total_cmp);
            (percentile(&v, low), percentile(&v, high))
        }
    };
    if !(lo < hi) {
        lo = lo.min(0.0);
        hi = hi.max(0.0);
        if !(lo < hi) {
            (lo, hi) = (-1.0, 1.0);
        }
    }
    Ok((QuantParams { n, w_l: lo, w_h: hi, scale_k: scale.k }, scale.degenerate))
}

pub(crate) fn check_width(n: u32) -> Result<(), QuantError> {
    if matches!(n, 4 | 8 | 16) {
        Ok(())
    } else {
        Err(QuantError::BitWidth(n))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    /// Integer codes in `[0, 2^n - 1]`.
    pub codes: Vec<u32>,
    /// Dequantized values in the normalized (`W / k`) domain.
    pub deq: Tensor,
}

impl QuantParams {
    pub fn validate(&self) -> Result<(), QuantError> {
        check_width(self.n)?;
        if !(self.w_l < self.w_h) || !self.w_l.is_finite() || !self.w_h.is_finite() {
            return Err(QuantError::InvalidParams(format!("need w_l < w_h, got [{}, {}]", self.w_l, self.w_h)));
        }
        if !(self.scale_k > 0.0) {
            return Err(QuantError::InvalidParams(format!("scale_k must be positive, got {}", self.scale_k)));
        }
        Ok(())
    }

    pub fn levels(&self) -> f64 {
        ((1u64 << self.n) - 1) as f64
    }

    /// Width of one quantization step in the normalized domain.
    pub fn step(&self) -> f64 {
        (self.w_h - self.w_l) / self.levels()
    }

    /// Code of one weight.
    pub fn code(&self, w: f64) -> u32 {
        let x = (w / self.scale_k).clamp(self.w_l, self.w_h);
        ((x - self.w_l) * self.levels() / (self.w_h - self.w_l)).round() as u32
    }

    /// Normalized-domain value of a code.
    pub fn dequantize_code(&self, code: u32) -> f64 {
        code as f64 * (self.w_h - self.w_l) / self.levels() + self.w_l
    }

    /// Weight-domain reconstruction `k * deq(code(w))`.
    pub fn reconstruct(&self, w: f64) -> f64 {
        self.scale_k * self.dequantize_code(self.code(w))
    }
}

pub fn quantize_adaptive(w: &Tensor, p: &QuantParams) -> Result<Quantized, QuantError> {
    p.validate()?;
    let codes: Vec<u32> = w.data().iter().map(|&x| p.code(x)).collect();
    let deq = codes.iter().map(|&c| p.dequantize_code(c)).collect();
    Ok(Quantized { codes, deq: Tensor::new(w.shape().to_vec(), deq)? })
}

/// Weight-domain fake quantization: each weight replaced by its
/// reconstruction.
pub fn fake_quantize(w: &Tensor, p: &QuantParams) -> Result<Tensor, QuantError> {
    p.validate()?;
    Ok(w.map(|x| p.reconstruct(x)))
}
