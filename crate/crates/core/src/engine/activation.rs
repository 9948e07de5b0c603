//! Activation functions on the CORDIC unit, plus exact references used for
//! training and error bounds.

use std::fmt;
use std::str::FromStr;

use super::cordic::{cordic_exp, cordic_sigmoid, cordic_tanh};
use super::EngineError;
use crate::quant::Tensor;

pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_2;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Activation {
    #[default]
    None,
    Relu,
    Sigmoid,
    Tanh,
    Swish,
    Gelu,
    Selu,
    SoftMax,
}

impl Activation {
    pub const ALL: [Activation; 8] = [
        Activation::None,
        Activation::Relu,
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Swish,
        Activation::Gelu,
        Activation::Selu,
        Activation::SoftMax,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Activation::None => "none",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Swish => "swish",
            Activation::Gelu => "gelu",
            Activation::Selu => "selu",
            Activation::SoftMax => "softmax",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = EngineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Activation::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| EngineError::Manifest(format!("unknown activation `{s}`")))
    }
}

fn softmax_with(x: &[f64], exp: impl Fn(f64) -> f64) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|&v| exp(v - m)).collect();
    let sum: f64 = e.iter().sum();
    e.iter().map(|v| v / sum).collect()
}

fn apply_with(kind: Activation, x: &[f64], sigmoid: impl Fn(f64) -> f64, tanh: impl Fn(f64) -> f64, exp: impl Fn(f64) -> f64) -> Vec<f64> {
    match kind {
        Activation::None => x.to_vec(),
        Activation::Relu => x.iter().map(|&v| v.max(0.0)).collect(),
        Activation::Sigmoid => x.iter().map(|&v| sigmoid(v)).collect(),
        Activation::Tanh => x.iter().map(|&v| tanh(v)).collect(),
        Activation::Swish => x.iter().map(|&v| v * sigmoid(v)).collect(),
        Activation::Gelu => x.iter().map(|&v| 0.5 * v * (1.0 + tanh(GELU_C * (v + 0.044715 * v * v * v)))).collect(),
        Activation::Selu => x
            .iter()
            .map(|&v| if v > 0.0 { SELU_LAMBDA * v } else { SELU_LAMBDA * SELU_ALPHA * (exp(v) - 1.0) })
            .collect(),
        Activation::SoftMax => softmax_with(x, exp),
    }
}

/// Activation on the CORDIC unit. SoftMax normalizes over the whole slice.
pub fn activation_values(kind: Activation, x: &[f64], iterations: u32) -> Vec<f64> {
    apply_with(
        kind,
        x,
        |v| cordic_sigmoid(v, iterations),
        |v| cordic_tanh(v, iterations),
        |v| cordic_exp(v, iterations),
    )
}

pub fn activation_apply(kind: Activation, x: &Tensor, iterations: u32) -> Tensor {
    Tensor::new(x.shape().to_vec(), activation_values(kind, x.data(), iterations)).expect("shape preserved")
}

/// Same functions evaluated with the standard library.
pub fn activation_reference(kind: Activation, x: &[f64]) -> Vec<f64> {
    apply_with(kind, x, |v| 1.0 / (1.0 + (-v).exp()), f64::tanh, f64::exp)
}

/// Elementwise derivative `d out / d z` for the activations supported in
/// training (softmax is folded into the loss).
pub fn activation_derivative(kind: Activation, z: f64) -> Result<f64, EngineError> {
    Ok(match kind {
        Activation::None => 1.0,
        Activation::Relu => {
            if z > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Sigmoid => {
            let s = 1.0 / (1.0 + (-z).exp());
            s * (1.0 - s)
        }
        Activation::Tanh => 1.0 - z.tanh().powi(2),
        other => return Err(EngineError::Unsupported(format!("training through {other}"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::cordic::DEFAULT_ITERATIONS;

    #[test]
    fn examples() {
        assert_eq!(activation_values(Activation::Relu, &[-2.0, 3.0], 16), vec![0.0, 3.0]);
        let sm = activation_values(Activation::SoftMax, &[0.7; 5], 16);
        for v in &sm {
            assert!((v - 0.2).abs() < 1e-12);
        }
        let g = activation_values(Activation::Gelu, &[1.0], DEFAULT_ITERATIONS)[0];
        assert!((g - 0.841_191_990_608_224_5).abs() < 2e-3);
    }

    #[test]
    fn names_roundtrip() {
        for a in Activation::ALL {
            assert_eq!(a.name().parse::<Activation>().unwrap(), a);
        }
        assert!("mish".parse::<Activation>().is_err());
    }

    #[test]
    fn cordic_close_to_reference() {
        let xs: Vec<f64> = (0..=1600).map(|i| -8.0 + i as f64 / 100.0).collect();
        for kind in Activation::ALL {
            let a = activation_values(kind, &xs, DEFAULT_ITERATIONS);
            let b = activation_reference(kind, &xs);
            let err = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(err < 1e-3, "{kind}: {err}");
        }
    }
}
