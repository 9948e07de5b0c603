use criterion::{criterion_group, criterion_main, Criterion};
use polaron_core::engine::{
    activation_values, calibrate_plan, generate_digits, init_mlp, Activation, ExecConfig, PreparedModel,
    DEFAULT_ITERATIONS,
};
use polaron_core::quant::{PolicyConfig, Tensor, ThresholdMode};

fn inference(c: &mut Criterion) {
    let m = init_mlp(&[196, 64, 32, 32, 10], 7).unwrap();
    let data = generate_digits(64, 1);
    let (plan, _) = calibrate_plan(&m, &data, &PolicyConfig::default(), ThresholdMode::default()).unwrap();
    let x = Tensor::vector(data.images[0].clone());
    let mut g = c.benchmark_group("mlp_inference");
    for parallel in [false, true] {
        let cfg = ExecConfig { parallel, ..Default::default() };
        let prepared = PreparedModel::new(&m, &plan, &cfg).unwrap();
        g.bench_function(if parallel { "parallel" } else { "sequential" }, |bench| {
            bench.iter(|| prepared.infer(&x).unwrap())
        });
    }
    g.finish();
}

fn activations(c: &mut Criterion) {
    let xs: Vec<f64> = (0..1024).map(|i| (i as f64 - 512.0) / 64.0).collect();
    let mut g = c.benchmark_group("activation_1024");
    for kind in [Activation::Sigmoid, Activation::Tanh, Activation::Gelu, Activation::SoftMax] {
        g.bench_function(kind.name(), |bench| bench.iter(|| activation_values(kind, &xs, DEFAULT_ITERATIONS)));
    }
    g.finish();
}

fn digits(c: &mut Criterion) {
    c.bench_function("generate_digits_256", |bench| bench.iter(|| generate_digits(256, 3)));
}

criterion_group!(benches, inference, activations, digits);
criterion_main!(benches);
