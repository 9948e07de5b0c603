use std::path::Path;

use anyhow::{bail, Context};
use polaron_core::engine::{
    calibrate_plan, generate_digits, init_mlp as build_mlp, reference_inference, train_epochs, Dataset,
    ExecConfig, ExecStats, ModelGraph, PreparedModel, Schedule, TrainHyper,
};
use polaron_core::quant::{PolicyConfig, QuantPlan, Tensor, ThresholdMode};
use rayon::prelude::*;

use crate::{DatapathArgs, DigitsArgs, InitMlpArgs, QuantizeArgs, RunArgs, Status};

fn load_model(dir: &Path) -> anyhow::Result<ModelGraph> {
    ModelGraph::load(dir).with_context(|| format!("loading model from {}", dir.display()))
}

fn load_tensor(path: &Path) -> anyhow::Result<Tensor> {
    Tensor::load(path).with_context(|| format!("reading tensor {}", path.display()))
}

fn exec_config(d: &DatapathArgs) -> ExecConfig {
    ExecConfig { zero_skip: !d.no_zero_skip, accumulation: d.accumulation.into(), ..Default::default() }
}

pub fn quantize(a: &QuantizeArgs) -> anyhow::Result<Status> {
    let m = load_model(&a.model)?;
    let (Some(calib), Some(labels)) = (&a.calib, &a.labels) else {
        bail!("quantize needs calibration data: pass --calib <images> and --labels <labels>");
    };
    let mut data = Dataset::from_tensors(&load_tensor(calib)?, &load_tensor(labels)?)?;
    if let Some(n) = a.samples {
        data = data.slice(0..n.min(data.len()));
    }
    if data.is_empty() {
        bail!("calibration batch is empty");
    }
    let policy = PolicyConfig { p_low: a.p_low, p_high: a.p_high, floor_ends: !a.no_floor_ends };
    let mode = if a.compat_symmetric { ThresholdMode::Symmetric } else { ThresholdMode::default() };
    let (plan, sens) = calibrate_plan(&m, &data, &policy, mode)?;
    plan.save(&a.out).with_context(|| format!("writing plan {}", a.out.display()))?;
    println!("layer,s_sc8,s_sc4,s_l,n_l,bits,format");
    for (s, l) in sens.iter().zip(&plan.layers) {
        println!("{},{:e},{:e},{:e},{},{},{}", s.layer_id, s.s_sc8, s.s_sc4, s.s_l, s.n_l, l.n, l.format);
    }
    Ok(Status::Ok)
}

/// Splits `input` into samples of the model's input size: either exactly one
/// sample, or a batch with samples along the first dimension.
fn samples(m: &ModelGraph, input: &Tensor) -> anyhow::Result<(Vec<Vec<f64>>, bool)> {
    let per: usize = m.input_shape.iter().product();
    if input.len() == per && input.shape() != [1, per].as_slice() {
        return Ok((vec![input.data().to_vec()], false));
    }
    let shape = input.shape();
    if shape.len() < 2 || shape[1..].iter().product::<usize>() != per {
        bail!("input shape {:?} matches neither {:?} nor a batch of it", shape, m.input_shape);
    }
    Ok((input.data().chunks(per).map(<[f64]>::to_vec).collect(), true))
}

pub fn run(a: &RunArgs) -> anyhow::Result<Status> {
    let mut m = load_model(&a.model)?;
    let cfg = exec_config(&a.datapath);
    let mut plan = match (&a.plan, a.float) {
        (_, true) => None,
        (Some(p), false) => Some(QuantPlan::load(p).with_context(|| format!("loading plan {}", p.display()))?),
        (None, false) => bail!("--plan is required unless --float is given"),
    };
    if let Some(p) = &plan {
        PreparedModel::new(&m, p, &cfg).context("plan does not fit the model")?;
    }
    let input = load_tensor(&a.input)?;
    let (xs, batched) = samples(&m, &input)?;
    let labels = a.labels.as_deref().map(load_tensor).transpose()?;

    if a.train {
        let Some(labels) = &labels else { bail!("--train needs --labels") };
        let data = Dataset::from_tensors(&Tensor::new(vec![xs.len(), xs[0].len()], xs.concat())?, labels)?;
        let hyper = TrainHyper { lr: a.lr, quantize: plan.is_some(), ..Default::default() };
        let schedule =
            Schedule { epochs: a.epochs, batch_size: a.batch, lr_decay: a.lr_decay, seed: a.seed, max_steps: None };
        let mut train_plan = plan.clone().unwrap_or_default();
        let losses = train_epochs(&mut m, &mut train_plan, &data, &schedule, &hyper, &cfg)?;
        for (i, l) in losses.iter().enumerate() {
            println!("epoch {} loss {l:.6}", i + 1);
        }
        if plan.is_some() {
            plan = Some(train_plan);
        }
        if let Some(dir) = &a.save_model {
            m.save(dir).with_context(|| format!("writing model to {}", dir.display()))?;
        }
        if let Some(p) = &a.save_plan {
            match &plan {
                Some(pl) => pl.save(p).with_context(|| format!("writing plan {}", p.display()))?,
                None => bail!("--save-plan needs a quantized run (drop --float)"),
            }
        }
    }

    let (outputs, stats) = infer_all(&m, plan.as_ref(), &xs, &cfg)?;
    let out_shape = m.output_shape()?;
    if let Some(labels) = &labels {
        if labels.len() != outputs.len() {
            bail!("{} labels for {} samples", labels.len(), outputs.len());
        }
        let correct = outputs.iter().zip(labels.data()).filter(|(o, &l)| argmax(o) as f64 == l).count();
        println!("accuracy {:.6} over {} samples", correct as f64 / outputs.len() as f64, outputs.len());
    }
    if let Some(path) = &a.out {
        let shape = if batched { [vec![xs.len()], out_shape].concat() } else { out_shape };
        Tensor::new(shape, outputs.concat())?.save(path).with_context(|| format!("writing {}", path.display()))?;
    } else if !batched {
        let line: Vec<String> = outputs[0].iter().map(|v| format!("{v}")).collect();
        println!("output {}", line.join(","));
    }
    let toml = stats.to_toml();
    match &a.stats {
        Some(path) => std::fs::write(path, toml).with_context(|| format!("writing {}", path.display()))?,
        None if plan.is_some() => {
            println!("cycles = {}", stats.total_cycles);
            println!("macs = {}", stats.total_macs);
            println!("utilization = {:.6}", stats.lane_utilization);
            println!("conflicts = {}", stats.bank_conflicts);
        }
        None => {}
    }
    Ok(Status::Ok)
}

/// Runs every sample; samples are spread over the thread pool and results
/// are combined in input order, so output does not depend on thread count.
fn infer_all(
    m: &ModelGraph,
    plan: Option<&QuantPlan>,
    xs: &[Vec<f64>],
    cfg: &ExecConfig,
) -> anyhow::Result<(Vec<Vec<f64>>, ExecStats)> {
    let inner = ExecConfig { parallel: xs.len() == 1 && cfg.parallel, ..*cfg };
    let prepared = plan.map(|p| PreparedModel::new(m, p, &inner)).transpose()?;
    let results: Vec<(Vec<f64>, ExecStats)> = xs
        .par_iter()
        .map(|x| -> anyhow::Result<_> {
            let t = Tensor::vector(x.clone());
            Ok(match &prepared {
                Some(p) => {
                    let r = p.infer(&t)?;
                    (r.output.into_data(), r.stats)
                }
                None => (reference_inference(m, &t)?.into_data(), ExecStats::default()),
            })
        })
        .collect::<anyhow::Result<_>>()?;
    let mut stats = ExecStats::default();
    let mut outputs = Vec::with_capacity(results.len());
    for (o, s) in results {
        stats.accumulate(&s);
        outputs.push(o);
    }
    Ok((outputs, stats))
}

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best }).0
}

pub fn digits(a: &DigitsArgs) -> anyhow::Result<Status> {
    let (images, labels) = generate_digits(a.count, a.seed).to_tensors();
    images.save(&a.images).with_context(|| format!("writing {}", a.images.display()))?;
    labels.save(&a.labels).with_context(|| format!("writing {}", a.labels.display()))?;
    println!("wrote {} digits", a.count);
    Ok(Status::Ok)
}

pub fn init_mlp(a: &InitMlpArgs) -> anyhow::Result<Status> {
    if a.sizes.len() < 2 {
        bail!("--sizes needs at least an input and an output size");
    }
    let m = build_mlp(&a.sizes, a.seed)?;
    m.save(&a.out).with_context(|| format!("writing model to {}", a.out.display()))?;
    println!("wrote {} layers to {}", m.layers.len(), a.out.display());
    Ok(Status::Ok)
}
