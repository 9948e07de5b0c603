//! Sequential layer graph, its weights, and the on-disk model directory
//! (`model.toml` manifest plus one `PLRN` file per weight/bias tensor).

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Activation, EngineError};
use crate::quant::Tensor;

pub const MANIFEST_FILE: &str = "model.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerKind {
    /// `outputs x inputs` weights, any input shape with `inputs` elements.
    Dense { inputs: usize, outputs: usize },
    /// Valid (unpadded) convolution over a `[in_channels, in_h, in_w]` input,
    /// weights `[out_channels, in_channels, kernel, kernel]`.
    Conv2d { in_channels: usize, out_channels: usize, kernel: usize, stride: usize, in_h: usize, in_w: usize },
    /// Elementwise (or softmax) activation only.
    Activation,
    Flatten,
}

impl LayerKind {
    pub fn name(&self) -> &'static str {
        match self {
            LayerKind::Dense { .. } => "dense",
            LayerKind::Conv2d { .. } => "conv2d",
            LayerKind::Activation => "activation",
            LayerKind::Flatten => "flatten",
        }
    }

    /// Layers whose arithmetic runs on the MAC engine.
    pub fn is_compute(&self) -> bool {
        matches!(self, LayerKind::Dense { .. } | LayerKind::Conv2d { .. })
    }

    pub fn conv_output_hw(&self) -> Option<(usize, usize)> {
        match *self {
            LayerKind::Conv2d { kernel, stride, in_h, in_w, .. } => {
                Some(((in_h - kernel) / stride + 1, (in_w - kernel) / stride + 1))
            }
            _ => None,
        }
    }

    /// Weight and bias shapes of compute layers.
    pub fn param_shapes(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        match *self {
            LayerKind::Dense { inputs, outputs } => Some((vec![outputs, inputs], vec![outputs])),
            LayerKind::Conv2d { in_channels, out_channels, kernel, .. } => {
                Some((vec![out_channels, in_channels, kernel, kernel], vec![out_channels]))
            }
            _ => None,
        }
    }

    /// Multiply-accumulates per inference (`out_elems * kernel_volume`).
    pub fn macs(&self) -> u64 {
        match *self {
            LayerKind::Dense { inputs, outputs } => (inputs * outputs) as u64,
            LayerKind::Conv2d { in_channels, out_channels, kernel, .. } => {
                let (oh, ow) = self.conv_output_hw().expect("conv");
                (out_channels * oh * ow * in_channels * kernel * kernel) as u64
            }
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub id: usize,
    #[serde(flatten)]
    pub kind: LayerKind,
    #[serde(default, with = "activation_name")]
    pub activation: Activation,
    /// Informational format string; the quantization plan is authoritative
    /// at run time, but a recorded precision must be a valid format.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<String>,
}

mod activation_name {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::Activation;

    pub fn serialize<S: Serializer>(a: &Activation, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(a.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Activation, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl LayerSpec {
    pub fn new(id: usize, kind: LayerKind, activation: Activation) -> Self {
        LayerSpec { id, kind, activation, precision: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub w: Tensor,
    pub b: Tensor,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    input: Vec<usize>,
    #[serde(rename = "layer", default)]
    layers: Vec<LayerSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelGraph {
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
    pub weights: BTreeMap<usize, LayerWeights>,
}

impl ModelGraph {
    /// A validated graph with zero weights on every compute layer.
    pub fn new(input_shape: Vec<usize>, layers: Vec<LayerSpec>) -> Result<Self, EngineError> {
        let weights = layers
            .iter()
            .filter_map(|l| {
                l.kind.param_shapes().map(|(w, b)| (l.id, LayerWeights { w: Tensor::zeros(w), b: Tensor::zeros(b) }))
            })
            .collect();
        let m = ModelGraph { input_shape, layers, weights };
        m.validate()?;
        Ok(m)
    }

    /// Output shape of every layer, in order; checks that the chain is
    /// consistent.
    pub fn shapes(&self) -> Result<Vec<Vec<usize>>, EngineError> {
        let mut shape = self.input_shape.clone();
        let mut out = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let len: usize = shape.iter().product();
            shape = match l.kind {
                LayerKind::Dense { inputs, outputs } => {
                    if inputs != len {
                        return Err(EngineError::Dim(format!("layer {}: expects {inputs} inputs, got {shape:?}", l.id)));
                    }
                    vec![outputs]
                }
                LayerKind::Conv2d { in_channels, out_channels, kernel, stride, in_h, in_w } => {
                    if shape != [in_channels, in_h, in_w] {
                        return Err(EngineError::Dim(format!(
                            "layer {}: expects [{in_channels}, {in_h}, {in_w}], got {shape:?}",
                            l.id
                        )));
                    }
                    if kernel == 0 || stride == 0 || kernel > in_h || kernel > in_w {
                        return Err(EngineError::Dim(format!("layer {}: bad kernel/stride", l.id)));
                    }
                    let (oh, ow) = l.kind.conv_output_hw().expect("conv");
                    vec![out_channels, oh, ow]
                }
                LayerKind::Activation => shape,
                LayerKind::Flatten => vec![len],
            };
            out.push(shape.clone());
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.input_shape.is_empty() || self.input_shape.contains(&0) {
            return Err(EngineError::Dim(format!("input shape {:?}", self.input_shape)));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if self.layers[..i].iter().any(|m| m.id == l.id) {
                return Err(EngineError::Manifest(format!("layer id {} appears twice", l.id)));
            }
            if let Some(p) = &l.precision {
                p.parse::<crate::formats::FormatDescriptor>()?;
            }
            match (l.kind.param_shapes(), self.weights.get(&l.id)) {
                (Some((ws, bs)), Some(lw)) => {
                    if lw.w.shape() != ws.as_slice() || lw.b.shape() != bs.as_slice() {
                        return Err(EngineError::Dim(format!(
                            "layer {}: weights {:?} / bias {:?}, expected {ws:?} / {bs:?}",
                            l.id,
                            lw.w.shape(),
                            lw.b.shape()
                        )));
                    }
                }
                (Some(_), None) => return Err(EngineError::Manifest(format!("layer {} has no weights", l.id))),
                (None, Some(_)) => return Err(EngineError::Manifest(format!("layer {} takes no weights", l.id))),
                (None, None) => {}
            }
        }
        if self.weights.keys().any(|id| !self.layers.iter().any(|l| l.id == *id)) {
            return Err(EngineError::Manifest("weights for an unknown layer id".into()));
        }
        self.shapes().map(|_| ())
    }

    pub fn output_shape(&self) -> Result<Vec<usize>, EngineError> {
        Ok(self.shapes()?.pop().unwrap_or_else(|| self.input_shape.clone()))
    }

    /// Ids of the layers that run on the MAC engine, in order.
    pub fn compute_layers(&self) -> Vec<usize> {
        self.layers.iter().filter(|l| l.kind.is_compute()).map(|l| l.id).collect()
    }

    pub fn layer(&self, id: usize) -> Option<&LayerSpec> {
        self.layers.iter().find(|l| l.id == id)
    }

    pub fn manifest_toml(&self) -> String {
        let m = Manifest { input: self.input_shape.clone(), layers: self.layers.clone() };
        toml::to_string(&m).expect("manifest serializes")
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), EngineError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(MANIFEST_FILE), self.manifest_toml())?;
        for (id, lw) in &self.weights {
            lw.w.save(dir.join(format!("layer{id}.w.plrn")))?;
            lw.b.save(dir.join(format!("layer{id}.b.plrn")))?;
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self, EngineError> {
        let dir = dir.as_ref();
        let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
        let man: Manifest = toml::from_str(&text).map_err(|e| EngineError::Manifest(e.to_string()))?;
        let mut weights = BTreeMap::new();
        for l in man.layers.iter().filter(|l| l.kind.is_compute()) {
            let w = Tensor::load(dir.join(format!("layer{}.w.plrn", l.id)))?;
            let b = Tensor::load(dir.join(format!("layer{}.b.plrn", l.id)))?;
            weights.insert(l.id, LayerWeights { w, b });
        }
        let m = ModelGraph { input_shape: man.input, layers: man.layers, weights };
        m.validate()?;
        Ok(m)
    }
}

/// Fully connected network `sizes[0] -> ... -> sizes[last]` with ReLU hidden
/// layers, a linear output layer and He-normal initial weights.
pub fn init_mlp(sizes: &[usize], seed: u64) -> Result<ModelGraph, EngineError> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(EngineError::Dim(format!("MLP sizes {sizes:?}")));
    }
    let last = sizes.len() - 2;
    let layers: Vec<LayerSpec> = sizes
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let act = if i == last { Activation::None } else { Activation::Relu };
            LayerSpec::new(i, LayerKind::Dense { inputs: w[0], outputs: w[1] }, act)
        })
        .collect();
    let mut m = ModelGraph::new(vec![sizes[0]], layers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (i, w) in sizes.windows(2).enumerate() {
        let normal = Normal::new(0.0, (2.0 / w[0] as f64).sqrt()).expect("positive std");
        let lw = m.weights.get_mut(&i).expect("dense weights");
        for v in lw.w.data_mut() {
            *v = normal.sample(&mut rng);
        }
    }
    Ok(m)
}
