use polaron_core::quant::{
    fit_params, pact, pact_gradients, pact_quantize_scalar, quantize_adaptive, QuantParams, Tensor, ThresholdMode,
};
use proptest::prelude::*;

fn weights() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0f64..3.0, 2..200)
}

fn width() -> impl Strategy<Value = u32> {
    proptest::sample::select(vec![4u32, 8, 16])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    /// Inside the thresholds the reconstruction is within half a step;
    /// outside, it is the nearest threshold.
    #[test]
    fn bounded_error(w in weights(), n in width()) {
        let t = Tensor::vector(w.clone());
        let (p, _) = fit_params(&t, n, ThresholdMode::default()).unwrap();
        let q = quantize_adaptive(&t, &p).unwrap();
        let half = p.step() / 2.0;
        for (&x, (&c, &d)) in w.iter().zip(q.codes.iter().zip(q.deq.data())) {
            prop_assert!(c as f64 <= p.levels());
            let y = (x / p.scale_k).clamp(p.w_l, p.w_h);
            prop_assert!((d - y).abs() <= half * (1.0 + 1e-9) + 1e-15, "x={x} y={y} deq={d} step={}", p.step());
        }
    }

    #[test]
    fn codes_are_monotone(w in weights(), n in width()) {
        let t = Tensor::vector(w.clone());
        let (p, _) = fit_params(&t, n, ThresholdMode::default()).unwrap();
        let mut pairs: Vec<(f64, u32)> = w.iter().map(|&x| (x, p.code(x))).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        prop_assert!(pairs.windows(2).all(|v| v[0].1 <= v[1].1));
    }

    #[test]
    fn symmetric_thresholds(w in weights(), n in width()) {
        let (p, _) = fit_params(&Tensor::vector(w), n, ThresholdMode::Symmetric).unwrap();
        prop_assert_eq!((p.w_l, p.w_h), (-1.0, 1.0));
    }

    #[test]
    fn pact_is_clip(x in -10.0f64..10.0, alpha in 0.01f64..8.0) {
        prop_assert_eq!(pact(x, alpha), x.clamp(0.0, alpha));
    }

    #[test]
    fn pact_grid_is_exact(y in 0.0f64..1.0, alpha in 0.01f64..8.0, n in width()) {
        let levels = ((1u64 << n) - 1) as f64;
        let v = pact_quantize_scalar(y * alpha, alpha, n);
        let code = (v * levels / alpha).round();
        prop_assert!((0.0..=levels).contains(&code));
        prop_assert!((v - alpha * code / levels).abs() <= 1e-12 * alpha);
        prop_assert!((v - y * alpha).abs() <= alpha / levels / 2.0 * (1.0 + 1e-9));
    }

    #[test]
    fn pact_gradients_split_at_alpha(xs in proptest::collection::vec(-5.0f64..5.0, 1..50), alpha in 0.1f64..4.0) {
        let x = Tensor::vector(xs.clone());
        let up = Tensor::vector(vec![1.0; xs.len()]);
        let g = pact_gradients(&x, alpha, &up).unwrap();
        let above = xs.iter().filter(|&&v| v >= alpha).count() as f64;
        prop_assert_eq!(g.dalpha, above);
        for (&v, &d) in xs.iter().zip(g.dx.data()) {
            prop_assert_eq!(d, if (0.0..=alpha).contains(&v) { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn params_validate() {
    let bad = QuantParams { n: 8, w_l: 1.0, w_h: -1.0, scale_k: 1.0 };
    assert!(bad.validate().is_err());
    let t = Tensor::vector(vec![0.5, -0.25]);
    assert!(fit_params(&t, 5, ThresholdMode::default()).is_err());
}
