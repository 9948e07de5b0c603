//! Layer-adaptive precision assignment and the plan file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fit_params, LayerSensitivity, PactParams, QuantError, QuantParams, Tensor, ThresholdMode};
use crate::formats::FormatDescriptor;

/// Percentile bands: below `p_low` -> 4-bit, below `p_high` -> 8-bit,
/// otherwise 16-bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    pub p_low: f64,
    pub p_high: f64,
    /// Keep the first and last layers at 8 bits or more.
    pub floor_ends: bool,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig { p_low: 30.0, p_high: 85.0, floor_ends: true }
    }
}

/// Mid-rank percentile of each value in `[0, 100]`: tied values share the
/// mean of their ranks, so equal inputs land on the 50th percentile.
pub fn rank_percentiles(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n == 1 {
        return vec![50.0];
    }
    values
        .iter()
        .map(|&v| {
            let less = values.iter().filter(|&&u| u < v).count() as f64;
            let equal = values.iter().filter(|&&u| u == v).count() as f64;
            100.0 * (less + (equal - 1.0) / 2.0) / (n - 1) as f64
        })
        .collect()
}

pub fn assign_bit_widths(sens: &[LayerSensitivity], policy: &PolicyConfig) -> Vec<u32> {
    let s: Vec<f64> = sens.iter().map(|l| l.s_l).collect();
    let pct = rank_percentiles(&s);
    let last = sens.len().saturating_sub(1);
    pct.iter()
        .enumerate()
        .map(|(i, &p)| {
            let n = if p < policy.p_low {
                4
            } else if p < policy.p_high {
                8
            } else {
                16
            };
            if policy.floor_ends && (i == 0 || i == last) {
                n.max(8)
            } else {
                n
            }
        })
        .collect()
}

/// Datapath format for a quantizer width: fixed-point with two integer bits.
pub fn default_format(n: u32) -> FormatDescriptor {
    FormatDescriptor::fxp(n, n - 2).expect("4/8/16-bit fixed-point formats are valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerPlan {
    pub id: usize,
    pub format: String,
    pub n: u32,
    pub w_l: f64,
    pub w_h: f64,
    pub scale_k: f64,
    pub alpha: f64,
}

impl LayerPlan {
    pub fn quant(&self) -> QuantParams {
        QuantParams { n: self.n, w_l: self.w_l, w_h: self.w_h, scale_k: self.scale_k }
    }

    pub fn pact(&self) -> PactParams {
        PactParams { alpha: self.alpha, n: self.n }
    }

    pub fn format(&self) -> Result<FormatDescriptor, QuantError> {
        self.format.parse().map_err(|e| QuantError::Plan(format!("layer {}: {e}", self.id)))
    }

    pub fn set_quant(&mut self, q: &QuantParams) {
        self.n = q.n;
        self.w_l = q.w_l;
        self.w_h = q.w_h;
        self.scale_k = q.scale_k;
    }
}

/// Per-layer precision plan, serialized as TOML `[[layer]]` tables in
/// layer order with keys `id, format, n, w_l, w_h, scale_k, alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct QuantPlan {
    #[serde(rename = "layer", default)]
    pub layers: Vec<LayerPlan>,
}

impl QuantPlan {
    pub fn get(&self, id: usize) -> Option<&LayerPlan> {
        self.layers.iter().find(|l| l.id == id)
    }

    pub fn get_mut(&mut self, id: usize) -> Option<&mut LayerPlan> {
        self.layers.iter_mut().find(|l| l.id == id)
    }

    pub fn validate(&self) -> Result<(), QuantError> {
        for (i, l) in self.layers.iter().enumerate() {
            if self.layers[..i].iter().any(|m| m.id == l.id) {
                return Err(QuantError::Plan(format!("layer {} appears twice", l.id)));
            }
            l.format()?;
            l.quant().validate()?;
            if !(l.alpha > 0.0) {
                return Err(QuantError::Plan(format!("layer {}: alpha must be positive", l.id)));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plan serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, QuantError> {
        let plan: QuantPlan = toml::from_str(text).map_err(|e| QuantError::Plan(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), QuantError> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, QuantError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Histogram of quantizer widths, `(n, count)` ascending.
    pub fn width_histogram(&self) -> Vec<(u32, usize)> {
        let mut out: Vec<(u32, usize)> = Vec::new();
        for n in [4, 8, 16] {
            let c = self.layers.iter().filter(|l| l.n == n).count();
            if c > 0 {
                out.push((n, c));
            }
        }
        out
    }
}

/// Builds a full plan: widths from the policy, quantizer parameters fitted to
/// each layer's weights, PACT `alpha` per layer input.
pub fn assign_precisions(
    sens: &[LayerSensitivity],
    policy: &PolicyConfig,
    weights: &[&Tensor],
    alphas: &[f64],
    mode: ThresholdMode,
) -> Result<QuantPlan, QuantError> {
    if sens.is_empty() {
        return Err(QuantError::Plan("no layers to assign".into()));
    }
    if weights.len() != sens.len() || alphas.len() != sens.len() {
        return Err(QuantError::Plan(format!(
            "{} sensitivities, {} weight tensors, {} alphas",
            sens.len(),
            weights.len(),
            alphas.len()
        )));
    }
    let widths = assign_bit_widths(sens, policy);
    let mut layers = Vec::with_capacity(sens.len());
    for ((s, &n), (w, &alpha)) in sens.iter().zip(&widths).zip(weights.iter().zip(alphas)) {
        let (q, _) = fit_params(w, n, mode)?;
        layers.push(LayerPlan {
            id: s.layer_id,
            format: default_format(n).name(),
            n,
            w_l: q.w_l,
            w_h: q.w_h,
            scale_k: q.scale_k,
            alpha,
        });
    }
    let plan = QuantPlan { layers };
    plan.validate()?;
    Ok(plan)
}
