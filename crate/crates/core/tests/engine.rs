use polaron_core::engine::{
    generate_digits, init_mlp, run_inference, Activation, ExecConfig, LayerKind, LayerSpec, ModelGraph, PreparedModel,
};
use polaron_core::quant::{default_format, fit_params, LayerPlan, QuantPlan, Tensor, ThresholdMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lenet() -> ModelGraph {
    let conv = |id, c_in, c_out, k, stride, hw| {
        let kind = LayerKind::Conv2d { in_channels: c_in, out_channels: c_out, kernel: k, stride, in_h: hw, in_w: hw };
        LayerSpec::new(id, kind, Activation::Relu)
    };
    let dense = |id, i, o, a| LayerSpec::new(id, LayerKind::Dense { inputs: i, outputs: o }, a);
    let mut m = ModelGraph::new(
        vec![1, 28, 28],
        vec![
            conv(0, 1, 6, 5, 1, 28),
            conv(1, 6, 16, 5, 2, 24),
            LayerSpec::new(2, LayerKind::Flatten, Activation::None),
            dense(3, 1600, 120, Activation::Relu),
            dense(4, 120, 84, Activation::Relu),
            dense(5, 84, 10, Activation::None),
        ],
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for lw in m.weights.values_mut() {
        let fan_in = lw.w.len() / lw.w.shape()[0];
        let s = (2.0 / fan_in as f64).sqrt();
        for v in lw.w.data_mut() {
            *v = rng.random_range(-s..s);
        }
    }
    m
}

fn uniform_plan(m: &ModelGraph, n: u32) -> QuantPlan {
    let layers = m
        .compute_layers()
        .into_iter()
        .map(|id| {
            let (q, _) = fit_params(&m.weights[&id].w, n, ThresholdMode::default()).unwrap();
            LayerPlan {
                id,
                format: default_format(n).name(),
                n,
                w_l: q.w_l,
                w_h: q.w_h,
                scale_k: q.scale_k,
                alpha: 2.0,
            }
        })
        .collect();
    QuantPlan { layers }
}

fn input(len: usize, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::vector((0..len).map(|_| rng.random_range(0.0..1.0)).collect())
}

#[test]
fn lenet_mac_counts() {
    let m = lenet();
    let want = [86_400u64, 240_000, 192_000, 10_080, 840];
    let r = run_inference(&m, &input(784, 1), &uniform_plan(&m, 8), &ExecConfig::default()).unwrap();
    let macs: Vec<u64> = r.stats.layers.iter().map(|l| l.macs).collect();
    assert_eq!(macs, want);
    assert_eq!(r.stats.total_macs, want.iter().sum::<u64>());
    assert_eq!(r.output.shape(), &[10]);
}

/// Each output is one dot product of the kernel volume, so a layer issues
/// `outputs * ceil(volume / lanes)` vector operations at 16 / 4 / 1 lanes.
#[test]
fn cycle_counts_follow_the_lane_law() {
    let m = lenet();
    let x = input(784, 2);
    let volumes = [25u64, 150, 1600, 120, 84];
    let outputs = [3456u64, 1600, 120, 84, 10];
    let mut ops_by_width = Vec::new();
    for (n, lanes) in [(4u32, 16u64), (8, 4), (16, 1)] {
        let r = run_inference(&m, &x, &uniform_plan(&m, n), &ExecConfig::default()).unwrap();
        let mut total = 0;
        for (i, l) in r.stats.layers.iter().enumerate() {
            let want = outputs[i] * volumes[i].div_ceil(lanes);
            assert_eq!(l.pipeline.vector_ops, want, "{n}-bit layer {}", l.id);
            assert_eq!(l.pipeline.cycles, want + 4);
            total += want;
        }
        ops_by_width.push(total);
    }
    // Volumes that are multiples of 16 give the exact 16:4:1 ratio.
    let mlp = init_mlp(&[64, 32, 16], 4).unwrap();
    let ops = |n| {
        run_inference(&mlp, &input(64, 3), &uniform_plan(&mlp, n), &ExecConfig::default()).unwrap().stats.layers
            [0]
        .pipeline
        .vector_ops
    };
    assert_eq!((ops(16), ops(8), ops(4)), (2048, 512, 128));
    assert!(ops_by_width[0] < ops_by_width[1] && ops_by_width[1] < ops_by_width[2]);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let m = lenet();
    let plan = uniform_plan(&m, 8);
    let x = input(784, 3);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let r = run_inference(&m, &x, &plan, &ExecConfig::default()).unwrap();
            (r.output.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(), r.stats.to_toml())
        })
    };
    let one = run(1);
    assert_eq!(one, run(3));
    let seq = run_inference(&m, &x, &plan, &ExecConfig { parallel: false, ..Default::default() }).unwrap();
    assert_eq!(one.1, seq.stats.to_toml());
}

#[test]
fn model_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = lenet();
    m.save(dir.path()).unwrap();
    let back = ModelGraph::load(dir.path()).unwrap();
    assert_eq!(back.input_shape, m.input_shape);
    assert_eq!(back.layers, m.layers);
    assert_eq!(back.weights, m.weights);
    let plan = uniform_plan(&m, 16);
    let x = input(784, 4);
    let a = PreparedModel::new(&m, &plan, &ExecConfig::default()).unwrap().infer(&x).unwrap();
    let b = PreparedModel::new(&back, &plan, &ExecConfig::default()).unwrap().infer(&x).unwrap();
    assert_eq!(a.output, b.output);
}

#[test]
fn plan_must_cover_the_model() {
    let m = lenet();
    let mut plan = uniform_plan(&m, 8);
    plan.layers.pop();
    assert!(PreparedModel::new(&m, &plan, &ExecConfig::default()).is_err());
}

#[test]
fn digits_are_reproducible_and_balanced() {
    let a = generate_digits(100, 5);
    assert_eq!(a.images, generate_digits(100, 5).images);
    assert_ne!(a.images, generate_digits(100, 6).images);
    for d in 0..10 {
        assert_eq!(a.labels.iter().filter(|&&l| l == d).count(), 10);
    }
    assert!(a.images.iter().flatten().all(|v| v.is_finite()));
}
