//! Quantization-aware training with 64-bit master weights.
//!
//! The forward pass runs the quantized MAC path; the backward pass treats
//! weight and activation quantizers as identity inside their clip ranges
//! (straight-through) and learns each layer's PACT clip `alpha`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::exec::{reference_forward, LayerTrace};
use super::{activation_derivative, Activation, Dataset, EngineError, ExecConfig, ExecStats, LayerKind, ModelGraph, PreparedModel};
use crate::quant::{
    assign_precisions, calibrate_layer, fit_params, percentile, LayerSensitivity, PolicyConfig, QuantPlan, Tensor,
    ThresholdMode,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainHyper {
    pub lr: f64,
    pub alpha_lr: f64,
    /// L2 penalty on every clip `alpha`.
    pub alpha_decay: f64,
    pub weight_decay: f64,
    /// `false`: identity quantizers and exact activations (plain 64-bit
    /// training).
    pub quantize: bool,
    /// Also learn the clip of the first compute layer, whose input is raw data.
    pub learn_input_alpha: bool,
    /// Refit quantizer thresholds and scale to the updated weights.
    pub refit: bool,
    pub threshold_mode: ThresholdMode,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            lr: 0.1,
            alpha_lr: 0.01,
            alpha_decay: 1e-4,
            weight_decay: 0.0,
            quantize: true,
            learn_input_alpha: false,
            refit: true,
            threshold_mode: ThresholdMode::default(),
        }
    }
}

/// Mini-batch SGD schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub epochs: usize,
    pub batch_size: usize,
    /// Stop after this many steps in total.
    pub max_steps: Option<usize>,
    /// Learning-rate multiplier applied after every epoch.
    pub lr_decay: f64,
    pub seed: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { epochs: 1, batch_size: 32, max_steps: None, lr_decay: 1.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Gradients {
    /// Mean cross-entropy over the batch.
    pub loss: f64,
    /// `(d weights, d bias)` per compute layer, same layout as the tensors.
    pub weights: BTreeMap<usize, (Vec<f64>, Vec<f64>)>,
    /// d loss / d alpha per compute layer (quantized training only).
    pub alphas: BTreeMap<usize, f64>,
}

fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Softmax cross-entropy of `logits` against class `label`.
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    -softmax(logits)[label].max(f64::MIN_POSITIVE).ln()
}

fn check_trainable(m: &ModelGraph) -> Result<(), EngineError> {
    for l in &m.layers {
        if !matches!(l.kind, LayerKind::Dense { .. } | LayerKind::Flatten) {
            return Err(EngineError::Unsupported(format!("training through {} layer {}", l.kind.name(), l.id)));
        }
    }
    Ok(())
}

struct SampleForward {
    output: Vec<f64>,
    trace: Vec<LayerTrace>,
}

fn forward_all(
    m: &ModelGraph,
    prepared: Option<&PreparedModel<'_>>,
    xs: &[&[f64]],
    parallel: bool,
) -> Result<Vec<SampleForward>, EngineError> {
    let one = |x: &&[f64]| -> Result<SampleForward, EngineError> {
        match prepared {
            Some(p) => {
                let (out, _, trace) = p.forward(&Tensor::vector(x.to_vec()), true)?;
                Ok(SampleForward { output: out.into_data(), trace })
            }
            None => {
                let (output, trace) = reference_forward(m, x)?;
                Ok(SampleForward { output, trace })
            }
        }
    };
    if parallel {
        xs.par_iter().map(one).collect()
    } else {
        xs.iter().map(one).collect()
    }
}

/// Loss and gradients of a labeled batch.
///
/// With `hyper.quantize` the forward pass goes through the MAC engine under
/// `plan`; otherwise it is the exact 64-bit network and `plan` is unused.
pub fn loss_and_gradients(
    m: &ModelGraph,
    plan: &QuantPlan,
    xs: &[&[f64]],
    labels: &[usize],
    hyper: &TrainHyper,
    cfg: &ExecConfig,
) -> Result<Gradients, EngineError> {
    check_trainable(m)?;
    if xs.len() != labels.len() || xs.is_empty() {
        return Err(EngineError::Dim(format!("{} inputs, {} labels", xs.len(), labels.len())));
    }
    let classes: usize = m.output_shape()?.iter().product();
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(EngineError::Dim(format!("label {bad} with {classes} outputs")));
    }
    let inner = ExecConfig { parallel: false, ..*cfg };
    let prepared = if hyper.quantize { Some(PreparedModel::new(m, plan, &inner)?) } else { None };
    let forwards = forward_all(m, prepared.as_ref(), xs, cfg.parallel)?;

    let mut g = Gradients::default();
    for id in m.compute_layers() {
        let lw = &m.weights[&id];
        g.weights.insert(id, (vec![0.0; lw.w.len()], vec![0.0; lw.b.len()]));
        if hyper.quantize {
            g.alphas.insert(id, 0.0);
        }
    }
    let last = m.layers.len() - 1;
    for (f, &label) in forwards.iter().zip(labels) {
        let last_spec = &m.layers[last];
        let softmax_out = last_spec.activation == Activation::SoftMax;
        let logits = if softmax_out { &f.trace[last].pre_act } else { &f.output };
        let p = softmax(logits);
        g.loss += -p[label].max(f64::MIN_POSITIVE).ln();
        // Gradient w.r.t. the current layer's output (or pre-activation when
        // `dz_ready`).
        let mut dout: Vec<f64> = p.iter().enumerate().map(|(i, &v)| v - if i == label { 1.0 } else { 0.0 }).collect();
        let mut dz_ready = softmax_out;
        for li in (0..m.layers.len()).rev() {
            let spec = &m.layers[li];
            let t = &f.trace[li];
            let dz: Vec<f64> = if dz_ready {
                dout
            } else {
                t.pre_act
                    .iter()
                    .zip(&dout)
                    .map(|(&z, &d)| Ok(d * activation_derivative(spec.activation, z)?))
                    .collect::<Result<_, EngineError>>()?
            };
            dz_ready = false;
            dout = match spec.kind {
                LayerKind::Dense { inputs, outputs } => {
                    let master = &m.weights[&spec.id].w;
                    let w_used = match &prepared {
                        Some(p) => p.effective_weights(spec.id).expect("compute layer"),
                        None => master.data(),
                    };
                    let lp = plan.get(spec.id).filter(|_| hyper.quantize);
                    let clip = lp.map(|lp| (lp.scale_k, lp.w_l, lp.w_h));
                    let (gw, gb) = g.weights.get_mut(&spec.id).expect("compute layer");
                    let mut dx = vec![0.0; inputs];
                    for o in 0..outputs {
                        let d = dz[o];
                        gb[o] += d;
                        if d == 0.0 {
                            continue;
                        }
                        let row = o * inputs;
                        for i in 0..inputs {
                            let pass = match clip {
                                Some((k, lo, hi)) => {
                                    let r = master.data()[row + i] / k;
                                    (lo..=hi).contains(&r)
                                }
                                None => true,
                            };
                            if pass {
                                gw[row + i] += d * t.input_q[i];
                            }
                            dx[i] += w_used[row + i] * d;
                        }
                    }
                    if let Some(lp) = lp {
                        let mut dalpha = 0.0;
                        for (v, &x) in dx.iter_mut().zip(&t.input) {
                            if x >= lp.alpha {
                                dalpha += *v;
                            }
                            if !(0.0..=lp.alpha).contains(&x) {
                                *v = 0.0;
                            }
                        }
                        *g.alphas.get_mut(&spec.id).expect("compute layer") += dalpha;
                    }
                    dx
                }
                LayerKind::Flatten => dz,
                _ => unreachable!("checked trainable"),
            };
        }
    }
    let scale = 1.0 / xs.len() as f64;
    g.loss *= scale;
    for (gw, gb) in g.weights.values_mut() {
        gw.iter_mut().chain(gb.iter_mut()).for_each(|v| *v *= scale);
    }
    g.alphas.values_mut().for_each(|v| *v *= scale);
    Ok(g)
}

/// One SGD step; returns the batch loss before the update.
pub fn train_step(
    m: &mut ModelGraph,
    plan: &mut QuantPlan,
    xs: &[&[f64]],
    labels: &[usize],
    hyper: &TrainHyper,
    cfg: &ExecConfig,
) -> Result<f64, EngineError> {
    let g = loss_and_gradients(m, plan, xs, labels, hyper, cfg)?;
    for (id, (gw, gb)) in &g.weights {
        let lw = m.weights.get_mut(id).expect("compute layer");
        for (w, d) in lw.w.data_mut().iter_mut().zip(gw) {
            *w -= hyper.lr * (d + hyper.weight_decay * *w);
        }
        for (b, d) in lw.b.data_mut().iter_mut().zip(gb) {
            *b -= hyper.lr * d;
        }
    }
    if hyper.quantize {
        let first = m.compute_layers().first().copied();
        for (id, da) in &g.alphas {
            if Some(*id) == first && !hyper.learn_input_alpha {
                continue;
            }
            let lp = plan.get_mut(*id).expect("plan covers layer");
            lp.alpha = (lp.alpha - hyper.alpha_lr * (da + hyper.alpha_decay * lp.alpha)).max(1e-3);
        }
        if hyper.refit {
            for lp in plan.layers.iter_mut() {
                let (q, _) = fit_params(&m.weights[&lp.id].w, lp.n, hyper.threshold_mode)?;
                lp.set_quant(&q);
            }
        }
    }
    Ok(g.loss)
}

/// Runs `schedule` over `data`; returns the mean loss of every epoch.
pub fn train_epochs(
    m: &mut ModelGraph,
    plan: &mut QuantPlan,
    data: &Dataset,
    schedule: &Schedule,
    hyper: &TrainHyper,
    cfg: &ExecConfig,
) -> Result<Vec<f64>, EngineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut hyper = *hyper;
    let mut steps = 0usize;
    let mut losses = Vec::new();
    'epochs: for _ in 0..schedule.epochs {
        order.shuffle(&mut rng);
        let (mut sum, mut count) = (0.0, 0usize);
        for batch in order.chunks(schedule.batch_size.max(1)) {
            if schedule.max_steps.is_some_and(|s| steps >= s) {
                if count > 0 {
                    losses.push(sum / count as f64);
                }
                break 'epochs;
            }
            let xs: Vec<&[f64]> = batch.iter().map(|&i| data.images[i].as_slice()).collect();
            let ys: Vec<usize> = batch.iter().map(|&i| data.labels[i]).collect();
            sum += train_step(m, plan, &xs, &ys, &hyper, cfg)?;
            count += 1;
            steps += 1;
        }
        losses.push(sum / count.max(1) as f64);
        hyper.lr *= schedule.lr_decay;
        hyper.alpha_lr *= schedule.lr_decay;
    }
    Ok(losses)
}

/// Top-1 accuracy in `[0, 1]`. With a plan every sample runs through the MAC
/// engine and the summed stats are returned; without one the exact 64-bit
/// network is used.
pub fn accuracy(
    m: &ModelGraph,
    plan: Option<&QuantPlan>,
    data: &Dataset,
    cfg: &ExecConfig,
) -> Result<(f64, ExecStats), EngineError> {
    if data.is_empty() {
        return Err(EngineError::Dim("empty dataset".into()));
    }
    let inner = ExecConfig { parallel: false, ..*cfg };
    let prepared = plan.map(|p| PreparedModel::new(m, p, &inner)).transpose()?;
    let one = |i: usize| -> Result<(bool, ExecStats), EngineError> {
        let (out, stats) = match &prepared {
            Some(p) => {
                let r = p.infer(&Tensor::vector(data.images[i].clone()))?;
                (r.output.into_data(), r.stats)
            }
            None => (reference_forward(m, &data.images[i])?.0, ExecStats::default()),
        };
        let best = out
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc });
        Ok((best.0 == data.labels[i], stats))
    };
    let results: Vec<(bool, ExecStats)> = if cfg.parallel {
        (0..data.len()).into_par_iter().map(one).collect::<Result<_, _>>()?
    } else {
        (0..data.len()).map(one).collect::<Result<_, _>>()?
    };
    let mut stats = ExecStats::default();
    let mut correct = 0usize;
    for (ok, s) in &results {
        correct += *ok as usize;
        if plan.is_some() {
            stats.accumulate(s);
        }
    }
    Ok((correct as f64 / data.len() as f64, stats))
}

/// Sensitivity analysis on a labeled calibration batch followed by
/// precision assignment.
///
/// Each layer's clip `alpha` starts at the 99.5th percentile of its input
/// over the batch.
pub fn calibrate_plan(
    m: &ModelGraph,
    calib: &Dataset,
    policy: &PolicyConfig,
    mode: ThresholdMode,
) -> Result<(QuantPlan, Vec<LayerSensitivity>), EngineError> {
    if calib.is_empty() {
        return Err(EngineError::Dim("empty calibration batch".into()));
    }
    let xs: Vec<&[f64]> = calib.images.iter().map(Vec::as_slice).collect();
    let hyper = TrainHyper { quantize: false, ..Default::default() };
    let g = loss_and_gradients(m, &QuantPlan::default(), &xs, &calib.labels, &hyper, &ExecConfig::default())?;
    let traces: Vec<Vec<LayerTrace>> =
        xs.iter().map(|x| reference_forward(m, x).map(|r| r.1)).collect::<Result<_, _>>()?;
    let mut sens = Vec::new();
    let mut alphas = Vec::new();
    for (li, l) in m.layers.iter().enumerate().filter(|(_, l)| l.kind.is_compute()) {
        let w = &m.weights[&l.id].w;
        let grad = Tensor::new(w.shape().to_vec(), g.weights[&l.id].0.clone())?;
        sens.push(calibrate_layer(l.id, w, &grad, mode)?);
        let mut inputs: Vec<f64> = traces.iter().flat_map(|t| t[li].input.iter().copied()).collect();
        inputs.sort_by(f64::total_cmp);
        let a = percentile(&inputs, 99.5);
        alphas.push(if a > 0.0 { a } else { 1.0 });
    }
    let weights: Vec<&Tensor> = m.compute_layers().iter().map(|id| &m.weights[id].w).collect();
    let plan = assign_precisions(&sens, policy, &weights, &alphas, mode)?;
    Ok((plan, sens))
}
