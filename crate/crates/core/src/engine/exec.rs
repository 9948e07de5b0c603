//! Quantized inference through the MAC engine.
//!
//! Fixed-point layers feed the MAC with zero-point-shifted integer codes:
//! weight codes `c` and activation codes `a` (both in `[0, 2^n - 1]`) enter
//! as `c - z`, `a - z` with `z = 2^(n-1)`, and the exact integer sum is
//! corrected afterwards with the row/patch code sums. Float and posit layers
//! encode the reconstructed weights and quantized activations directly.
//! Either way the dot product is read from the exact accumulator.

use rayon::prelude::*;
use serde::Serialize;

use super::{activation_values, EngineError, LayerKind, MemoryModel, ModelGraph, DEFAULT_ITERATIONS};
use crate::formats::{decode, encode_f64, EncodedScalar, FormatDescriptor, RoundingMode};
use crate::mac::{dot_product_acc, Accumulation, MacConfig, PipelineStats};
use crate::quant::{pact, LayerPlan, QuantPlan, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecConfig {
    pub zero_skip: bool,
    pub accumulation: Accumulation,
    pub banks: u32,
    pub ports_per_bank: u32,
    pub cordic_iterations: u32,
    /// Spread each layer's output neurons over the rayon pool.
    pub parallel: bool,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            zero_skip: true,
            accumulation: Accumulation::ExactWide,
            banks: 16,
            ports_per_bank: 1,
            cordic_iterations: DEFAULT_ITERATIONS,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerStats {
    pub id: usize,
    pub kind: String,
    pub format: String,
    /// Multiply-accumulates requested by the layer (`out_elems * kernel_volume`).
    pub macs: u64,
    #[serde(flatten)]
    pub pipeline: PipelineStats,
    pub conflicts: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExecStats {
    pub inferences: u64,
    pub layers: Vec<LayerStats>,
    pub total_cycles: u64,
    pub total_macs: u64,
    /// `sum(mac_ops) / sum(lane_slots)` over all layers.
    pub lane_utilization: f64,
    pub bank_conflicts: u64,
}

#[derive(Serialize)]
struct StatsFile<'a> {
    inferences: u64,
    cycles: u64,
    macs: u64,
    utilization: f64,
    conflicts: u64,
    #[serde(rename = "layer")]
    layers: &'a [LayerStats],
}

impl ExecStats {
    fn from_layers(layers: Vec<LayerStats>, inferences: u64) -> Self {
        let mut s = ExecStats { inferences, layers, ..Default::default() };
        s.recompute_totals();
        s
    }

    fn recompute_totals(&mut self) {
        let (mut ops, mut slots) = (0u64, 0u64);
        self.total_cycles = 0;
        self.total_macs = 0;
        self.bank_conflicts = 0;
        for l in &self.layers {
            self.total_cycles += l.pipeline.cycles;
            self.total_macs += l.macs;
            self.bank_conflicts += l.conflicts;
            ops += l.pipeline.mac_ops;
            slots += l.pipeline.lane_slots;
        }
        self.lane_utilization = if slots == 0 { 0.0 } else { ops as f64 / slots as f64 };
    }

    /// Adds another run over the same model, layer by layer.
    pub fn accumulate(&mut self, other: &ExecStats) {
        if self.layers.is_empty() {
            *self = other.clone();
            return;
        }
        assert_eq!(self.layers.len(), other.layers.len(), "stats from different models");
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.macs += b.macs;
            a.pipeline = a.pipeline.then(&b.pipeline);
            a.conflicts += b.conflicts;
        }
        self.inferences += other.inferences;
        self.recompute_totals();
    }

    /// Stable-key TOML: totals, then one `[[layer]]` table per layer.
    pub fn to_toml(&self) -> String {
        let file = StatsFile {
            inferences: self.inferences,
            cycles: self.total_cycles,
            macs: self.total_macs,
            utilization: self.lane_utilization,
            conflicts: self.bank_conflicts,
            layers: &self.layers,
        };
        toml::to_string(&file).expect("stats serialize")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub output: Tensor,
    pub stats: ExecStats,
}

/// Intermediate values of one layer, kept for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LayerTrace {
    /// Layer input before activation quantization.
    pub input: Vec<f64>,
    /// Input as seen by the datapath (clipped and quantized).
    pub input_q: Vec<f64>,
    /// Output before the activation function.
    pub pre_act: Vec<f64>,
}

struct ComputeLayer {
    plan: LayerPlan,
    format: FormatDescriptor,
    mac: MacConfig,
    /// Per output channel / neuron, length = kernel volume.
    rows: Vec<Vec<EncodedScalar>>,
    /// Weight values the datapath actually multiplies, row-major.
    w_eff: Vec<f64>,
    bias: Vec<f64>,
    /// Fixed-point only: `sum(c - z)` per row, `k * step`, `k * w_l`.
    row_code_sum: Vec<i64>,
    weight_coef: f64,
    weight_offset: f64,
    /// Input indices of every output position (a single identity patch for
    /// dense layers).
    patches: Vec<Vec<usize>>,
    conflicts: u64,
}

enum Prepared {
    Compute(Box<ComputeLayer>),
    Plain,
}

/// A model bound to a plan with all weights quantized and encoded once.
pub struct PreparedModel<'m> {
    model: &'m ModelGraph,
    cfg: ExecConfig,
    layers: Vec<Prepared>,
}

struct QuantInput {
    values: Vec<f64>,
    scalars: Vec<EncodedScalar>,
    /// Fixed-point only: `a - z`.
    shifted: Vec<i64>,
}

fn zero_point(n: u32) -> i64 {
    1i64 << (n - 1)
}

fn levels(n: u32) -> f64 {
    ((1u64 << n) - 1) as f64
}

fn patches_for(kind: &LayerKind) -> Vec<Vec<usize>> {
    match *kind {
        LayerKind::Dense { inputs, .. } => vec![(0..inputs).collect()],
        LayerKind::Conv2d { in_channels, kernel, stride, in_h, in_w, .. } => {
            let (oh, ow) = kind.conv_output_hw().expect("conv");
            let mut out = Vec::with_capacity(oh * ow);
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut p = Vec::with_capacity(in_channels * kernel * kernel);
                    for ic in 0..in_channels {
                        for ky in 0..kernel {
                            for kx in 0..kernel {
                                p.push(ic * in_h * in_w + (oy * stride + ky) * in_w + ox * stride + kx);
                            }
                        }
                    }
                    out.push(p);
                }
            }
            out
        }
        _ => unreachable!("only compute layers have patches"),
    }
}

/// Bank conflicts of one inference: weights and activations sit in separate
/// banked buffers; every vector operation fetches its lanes from both.
fn count_conflicts(rows: usize, patches: &[Vec<usize>], lanes: usize, cfg: &ExecConfig) -> u64 {
    let mut wmem = MemoryModel::new(cfg.banks, cfg.ports_per_bank);
    let mut amem = MemoryModel::new(cfg.banks, cfg.ports_per_bank);
    let mut cycle = 0u64;
    let mut waddr = Vec::with_capacity(lanes);
    let mut aaddr = Vec::with_capacity(lanes);
    for r in 0..rows {
        for p in patches {
            let base = (r * p.len()) as u64;
            for (ci, chunk) in p.chunks(lanes).enumerate() {
                waddr.clear();
                aaddr.clear();
                waddr.extend((0..chunk.len() as u64).map(|j| base + (ci * lanes) as u64 + j));
                aaddr.extend(chunk.iter().map(|&i| i as u64));
                wmem.memory_access(&waddr, cycle);
                amem.memory_access(&aaddr, cycle);
                cycle += 1;
            }
        }
    }
    wmem.conflicts + amem.conflicts
}

fn map_outputs<T: Send>(
    n: usize,
    parallel: bool,
    f: impl Fn(usize) -> Result<T, EngineError> + Sync + Send,
) -> Result<Vec<T>, EngineError> {
    if parallel {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

impl ComputeLayer {
    fn new(kind: &LayerKind, plan: &LayerPlan, w: &Tensor, b: &Tensor, cfg: &ExecConfig) -> Result<Self, EngineError> {
        let format = plan.format()?;
        let q = plan.quant();
        q.validate()?;
        if format.is_fxp() && plan.n > format.total_bits {
            return Err(EngineError::Plan(format!(
                "layer {}: {}-bit codes do not fit {}",
                plan.id,
                plan.n,
                format.name()
            )));
        }
        let mac = MacConfig::new(format).with_accumulation(cfg.accumulation).with_zero_skip(cfg.zero_skip);
        mac.validate()?;
        let rows_n = w.shape()[0];
        let vol = w.len() / rows_n;
        let z = zero_point(plan.n);
        let mut rows = Vec::with_capacity(rows_n);
        let mut w_eff = Vec::with_capacity(w.len());
        let mut row_code_sum = Vec::new();
        for row in w.data().chunks(vol) {
            if format.is_fxp() {
                let mut sum = 0i64;
                let enc = row
                    .iter()
                    .map(|&v| {
                        let c = q.code(v) as i64 - z;
                        sum += c;
                        w_eff.push(q.reconstruct(v));
                        EncodedScalar::wrap(c as u32 & format.mask(), format)
                    })
                    .collect();
                row_code_sum.push(sum);
                rows.push(enc);
            } else {
                let enc: Vec<EncodedScalar> = row
                    .iter()
                    .map(|&v| {
                        let s = encode_f64(q.reconstruct(v), format, RoundingMode::NearestEven);
                        w_eff.push(decode(s).to_f64());
                        s
                    })
                    .collect();
                rows.push(enc);
            }
        }
        let patches = patches_for(kind);
        let conflicts = count_conflicts(rows_n, &patches, mac.mode.lanes as usize, cfg);
        Ok(ComputeLayer {
            plan: plan.clone(),
            format,
            mac,
            rows,
            w_eff,
            bias: b.data().to_vec(),
            row_code_sum,
            weight_coef: q.scale_k * q.step(),
            weight_offset: q.scale_k * q.w_l,
            patches,
            conflicts,
        })
    }

    fn quantize_input(&self, x: &[f64]) -> QuantInput {
        let (alpha, n) = (self.plan.alpha, self.plan.n);
        let l = levels(n);
        let mut q = QuantInput {
            values: Vec::with_capacity(x.len()),
            scalars: Vec::with_capacity(x.len()),
            shifted: Vec::new(),
        };
        for &v in x {
            let a = (pact(v, alpha) * l / alpha).round();
            let value = alpha * (a / l);
            q.values.push(value);
            if self.format.is_fxp() {
                let s = a as i64 - zero_point(n);
                q.shifted.push(s);
                q.scalars.push(EncodedScalar::wrap(s as u32 & self.format.mask(), self.format));
            } else {
                q.scalars.push(encode_f64(value, self.format, RoundingMode::NearestEven));
            }
        }
        q
    }

    /// One output element: row `r` against patch `p`.
    fn dot(&self, r: usize, p: usize, x: &QuantInput, dense: bool) -> Result<(f64, PipelineStats), EngineError> {
        let patch = &self.patches[p];
        let gathered: Vec<EncodedScalar>;
        let operands = if dense {
            &x.scalars
        } else {
            gathered = patch.iter().map(|&i| x.scalars[i]).collect();
            &gathered
        };
        let (acc, stats) = dot_product_acc(&self.rows[r], operands, &self.mac)?;
        let value = if self.format.is_fxp() {
            let s = acc.value.to_i128().expect("fixed-point sums fit 128 bits");
            let a_sum: i64 = patch.iter().map(|&i| x.shifted[i]).sum();
            let z = zero_point(self.plan.n) as i128;
            let count = patch.len() as i128;
            // sum(c * a) and sum(a) in unshifted codes.
            let ca = s + z * (self.row_code_sum[r] as i128 + a_sum as i128) + count * z * z;
            let a_total = a_sum as i128 + count * z;
            let s_a = self.plan.alpha / levels(self.plan.n);
            self.weight_coef * s_a * ca as f64 + self.weight_offset * s_a * a_total as f64
        } else {
            acc.to_f64()
        };
        Ok((value + self.bias[r], stats))
    }
}

impl<'m> PreparedModel<'m> {
    pub fn new(model: &'m ModelGraph, plan: &QuantPlan, cfg: &ExecConfig) -> Result<Self, EngineError> {
        model.validate()?;
        plan.validate()?;
        for lp in &plan.layers {
            match model.layer(lp.id) {
                Some(l) if l.kind.is_compute() => {}
                _ => return Err(EngineError::Plan(format!("plan entry {} names no compute layer", lp.id))),
            }
        }
        let layers = model
            .layers
            .iter()
            .map(|l| {
                if !l.kind.is_compute() {
                    return Ok(Prepared::Plain);
                }
                let lp = plan.get(l.id).ok_or_else(|| EngineError::Plan(format!("no plan entry for layer {}", l.id)))?;
                let lw = &model.weights[&l.id];
                Ok(Prepared::Compute(Box::new(ComputeLayer::new(&l.kind, lp, &lw.w, &lw.b, cfg)?)))
            })
            .collect::<Result<_, EngineError>>()?;
        Ok(PreparedModel { model, cfg: *cfg, layers })
    }

    pub fn config(&self) -> &ExecConfig {
        &self.cfg
    }

    /// Effective (quantized) weights of a compute layer, row-major.
    pub fn effective_weights(&self, id: usize) -> Option<&[f64]> {
        self.model.layers.iter().zip(&self.layers).find_map(|(l, p)| match p {
            Prepared::Compute(c) if l.id == id => Some(c.w_eff.as_slice()),
            _ => None,
        })
    }

    pub fn infer(&self, input: &Tensor) -> Result<Inference, EngineError> {
        let (output, stats, _) = self.forward(input, false)?;
        Ok(Inference { output, stats })
    }

    pub(crate) fn forward(
        &self,
        input: &Tensor,
        keep_trace: bool,
    ) -> Result<(Tensor, ExecStats, Vec<LayerTrace>), EngineError> {
        let expect: usize = self.model.input_shape.iter().product();
        if input.len() != expect {
            return Err(EngineError::Dim(format!(
                "input has {} elements, model expects {:?}",
                input.len(),
                self.model.input_shape
            )));
        }
        let shapes = self.model.shapes()?;
        let mut x = input.data().to_vec();
        let mut layer_stats = Vec::new();
        let mut trace = Vec::new();
        for ((spec, prepared), shape) in self.model.layers.iter().zip(&self.layers).zip(&shapes) {
            let (input_q, pre_act) = match prepared {
                Prepared::Plain => (None, x.clone()),
                Prepared::Compute(c) => {
                    let q = c.quantize_input(&x);
                    let dense = matches!(spec.kind, LayerKind::Dense { .. });
                    let positions = c.patches.len();
                    let results =
                        map_outputs(c.rows.len() * positions, self.cfg.parallel, |o| {
                            c.dot(o / positions, o % positions, &q, dense)
                        })?;
                    let (mut ops, mut slots, mut skipped) = (0u64, 0u64, 0u64);
                    let mut z = Vec::with_capacity(results.len());
                    for (v, s) in results {
                        z.push(v);
                        ops += s.vector_ops;
                        slots += s.lane_slots;
                        skipped += s.skipped_lanes;
                    }
                    layer_stats.push(LayerStats {
                        id: spec.id,
                        kind: spec.kind.name().into(),
                        format: c.format.name(),
                        macs: spec.kind.macs(),
                        pipeline: PipelineStats::from_counts(ops, slots, skipped),
                        conflicts: c.conflicts,
                    });
                    (Some(q.values), z)
                }
            };
            let out = activation_values(spec.activation, &pre_act, self.cfg.cordic_iterations);
            debug_assert_eq!(out.len(), shape.iter().product::<usize>());
            if keep_trace {
                trace.push(LayerTrace { input_q: input_q.unwrap_or_else(|| x.clone()), input: x, pre_act });
            }
            x = out;
        }
        let shape = shapes.last().cloned().unwrap_or_else(|| self.model.input_shape.clone());
        let output = Tensor::new(shape, x)?;
        Ok((output, ExecStats::from_layers(layer_stats, 1), trace))
    }
}

/// Runs one input through the model under `plan`.
pub fn run_inference(
    m: &ModelGraph,
    input: &Tensor,
    plan: &QuantPlan,
    cfg: &ExecConfig,
) -> Result<Inference, EngineError> {
    PreparedModel::new(m, plan, cfg)?.infer(input)
}

/// The exact 64-bit network (no quantization, exact activations) on one
/// input; the baseline the quantized runs are compared against.
pub fn reference_inference(m: &ModelGraph, input: &Tensor) -> Result<Tensor, EngineError> {
    let expect: usize = m.input_shape.iter().product();
    if input.len() != expect {
        return Err(EngineError::Dim(format!("input has {} elements, model expects {:?}", input.len(), m.input_shape)));
    }
    let (out, _) = reference_forward(m, input.data())?;
    Ok(Tensor::new(m.output_shape()?, out)?)
}

/// Unquantized 64-bit forward pass with exact activation functions.
pub(crate) fn reference_forward(m: &ModelGraph, input: &[f64]) -> Result<(Vec<f64>, Vec<LayerTrace>), EngineError> {
    let mut x = input.to_vec();
    let mut trace = Vec::with_capacity(m.layers.len());
    for spec in &m.layers {
        let pre_act = match spec.kind {
            LayerKind::Dense { inputs, outputs } => {
                let lw = &m.weights[&spec.id];
                (0..outputs)
                    .map(|o| {
                        let row = &lw.w.data()[o * inputs..(o + 1) * inputs];
                        row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + lw.b.data()[o]
                    })
                    .collect()
            }
            LayerKind::Conv2d { .. } => {
                let lw = &m.weights[&spec.id];
                let patches = patches_for(&spec.kind);
                let vol = patches[0].len();
                let rows = lw.w.shape()[0];
                let mut z = Vec::with_capacity(rows * patches.len());
                for r in 0..rows {
                    let row = &lw.w.data()[r * vol..(r + 1) * vol];
                    for p in &patches {
                        z.push(row.iter().zip(p).map(|(w, &i)| w * x[i]).sum::<f64>() + lw.b.data()[r]);
                    }
                }
                z
            }
            LayerKind::Activation | LayerKind::Flatten => x.clone(),
        };
        let out = super::activation_reference(spec.activation, &pre_act);
        trace.push(LayerTrace { input: x.clone(), input_q: x, pre_act });
        x = out;
    }
    Ok((x, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{init_mlp, Activation, LayerSpec};
    use crate::quant::{fit_params, ThresholdMode};

    fn plan_for(m: &ModelGraph, n: u32, format: &str, alpha: f64) -> QuantPlan {
        let layers = m
            .compute_layers()
            .into_iter()
            .map(|id| {
                let (q, _) = fit_params(&m.weights[&id].w, n, ThresholdMode::default()).unwrap();
                LayerPlan {
                    id,
                    format: format.into(),
                    n,
                    w_l: q.w_l,
                    w_h: q.w_h,
                    scale_k: q.scale_k,
                    alpha,
                }
            })
            .collect();
        QuantPlan { layers }
    }

    #[test]
    fn identity_dense_returns_quantized_input() {
        for (fmt, n) in [("fxp8:f6", 8), ("fxp16:f14", 16), ("bf16", 8), ("posit16", 16), ("fp8e5m2", 4)] {
            let mut m = ModelGraph::new(
                vec![1],
                vec![LayerSpec::new(0, LayerKind::Dense { inputs: 1, outputs: 1 }, Activation::None)],
            )
            .unwrap();
            m.weights.get_mut(&0).unwrap().w.data_mut()[0] = 1.0;
            let plan = plan_for(&m, n, fmt, 2.0);
            let prepared = PreparedModel::new(&m, &plan, &ExecConfig::default()).unwrap();
            let w_eff = prepared.effective_weights(0).unwrap()[0];
            for x in [-0.5, 0.0, 0.3, 1.0, 1.7, 5.0] {
                let out = prepared.infer(&Tensor::vector(vec![x])).unwrap().output.data()[0];
                let xq = crate::quant::pact_quantize_scalar(pact(x, 2.0), 2.0, n);
                let xq_enc = if fmt.starts_with("fxp") {
                    xq
                } else {
                    decode(encode_f64(xq, fmt.parse().unwrap(), RoundingMode::NearestEven)).to_f64()
                };
                assert!((out - w_eff * xq_enc).abs() <= 1e-12, "{fmt} x={x}: {out} vs {xq_enc}");
                assert!((w_eff - 1.0).abs() < 1e-12 || !fmt.starts_with("fxp"), "{fmt} {w_eff}");
            }
        }
    }

    #[test]
    fn fxp16_close_to_reference() {
        let m = init_mlp(&[20, 12, 5], 3).unwrap();
        let plan = plan_for(&m, 16, "fxp16:f14", 4.0);
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let got = run_inference(&m, &Tensor::vector(x.clone()), &plan, &ExecConfig::default()).unwrap();
        let (want, _) = reference_forward(&m, &x).unwrap();
        for (a, b) in got.output.data().iter().zip(&want) {
            assert!((a - b).abs() < 0.05, "{a} vs {b}");
        }
    }

    #[test]
    fn parallel_matches_sequential_and_stats_add_up() {
        let m = init_mlp(&[33, 17, 4], 5).unwrap();
        let plan = plan_for(&m, 8, "fxp8:f6", 3.0);
        let x = Tensor::vector((0..33).map(|i| (i % 5) as f64 * 0.4).collect());
        let par = run_inference(&m, &x, &plan, &ExecConfig::default()).unwrap();
        let seq = run_inference(&m, &x, &plan, &ExecConfig { parallel: false, ..Default::default() }).unwrap();
        assert_eq!(par, seq);
        let s = &par.stats;
        assert_eq!(s.total_macs, 33 * 17 + 17 * 4);
        assert_eq!(s.total_cycles, s.layers.iter().map(|l| l.pipeline.cycles).sum::<u64>());
        // 17 rows of ceil(33 / 4) ops, then 4 rows of ceil(17 / 4).
        assert_eq!(s.layers[0].pipeline.vector_ops, 17 * 9);
        assert_eq!(s.layers[0].pipeline.cycles, 17 * 9 + 4);
        assert_eq!(s.layers[1].pipeline.vector_ops, 4 * 5);
        let toml = s.to_toml();
        assert!(toml.starts_with("inferences = 1\ncycles = "), "{toml}");
        assert!(toml.contains("[[layer]]\nid = 0\nkind = \"dense\"\nformat = \"fxp8:f6\"\nmacs = 561\n"), "{toml}");
    }

    #[test]
    fn zero_skip_does_not_change_outputs() {
        let m = init_mlp(&[16, 8, 3], 8).unwrap();
        let plan = plan_for(&m, 8, "posit8", 2.0);
        let x = Tensor::vector((0..16).map(|i| if i % 3 == 0 { 0.0 } else { i as f64 / 10.0 }).collect());
        let on = run_inference(&m, &x, &plan, &ExecConfig::default()).unwrap();
        let off = run_inference(&m, &x, &plan, &ExecConfig { zero_skip: false, ..Default::default() }).unwrap();
        assert_eq!(on.output, off.output);
        assert!(on.stats.layers[0].pipeline.skipped_lanes > off.stats.layers[0].pipeline.skipped_lanes);
    }

    #[test]
    fn plan_must_cover_layers() {
        let m = init_mlp(&[4, 3, 2], 1).unwrap();
        let mut plan = plan_for(&m, 8, "fxp8:f6", 1.0);
        plan.layers.pop();
        let x = Tensor::vector(vec![0.0; 4]);
        assert!(matches!(run_inference(&m, &x, &plan, &ExecConfig::default()), Err(EngineError::Plan(_))));
        let plan = plan_for(&m, 8, "fxp8:f6", 1.0);
        let short = Tensor::vector(vec![0.0; 3]);
        assert!(matches!(run_inference(&m, &short, &plan, &ExecConfig::default()), Err(EngineError::Dim(_))));
    }

    #[test]
    fn dense_conflict_free_conv_counts_conflicts() {
        let kind = LayerKind::Conv2d { in_channels: 1, out_channels: 2, kernel: 3, stride: 1, in_h: 16, in_w: 16 };
        let cfg = ExecConfig::default();
        assert_eq!(count_conflicts(4, &patches_for(&LayerKind::Dense { inputs: 40, outputs: 4 }), 16, &cfg), 0);
        assert!(count_conflicts(2, &patches_for(&kind), 16, &cfg) > 0);
    }

    #[test]
    fn stats_accumulate() {
        let m = init_mlp(&[8, 4], 2).unwrap();
        let plan = plan_for(&m, 4, "fxp4:f2", 1.0);
        let x = Tensor::vector(vec![0.5; 8]);
        let one = run_inference(&m, &x, &plan, &ExecConfig::default()).unwrap().stats;
        let mut total = ExecStats::default();
        total.accumulate(&one);
        total.accumulate(&one);
        assert_eq!(total.inferences, 2);
        assert_eq!(total.total_macs, 2 * one.total_macs);
        assert_eq!(total.total_cycles, 2 * one.total_cycles);
    }
}
