use polaron_core::formats::{decode, encode_f64, EncodedScalar, FormatDescriptor, Value};
use polaron_core::RoundingMode;
use proptest::prelude::*;

fn format_strategy() -> impl Strategy<Value = FormatDescriptor> {
    proptest::sample::select(FormatDescriptor::all_standard())
}

fn finite(s: EncodedScalar) -> Option<f64> {
    match decode(s) {
        Value::Finite(x) => Some(x.to_f64()),
        _ => None,
    }
}

/// Largest finite value of `f`.
fn max_finite(f: FormatDescriptor) -> f64 {
    finite(EncodedScalar::wrap(f.max_finite_bits(false) as u32, f)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn encoding_is_idempotent(f in format_strategy(), x in -1e6f64..1e6) {
        let s = encode_f64(x, f, RoundingMode::NearestEven);
        if let Some(v) = finite(s) {
            prop_assert_eq!(encode_f64(v, f, RoundingMode::NearestEven), s);
        }
    }

    #[test]
    fn encoding_is_monotone(f in format_strategy(), x in -600f64..600.0, d in 0f64..50.0) {
        for mode in [RoundingMode::NearestEven, RoundingMode::TowardPositive] {
            let lo = finite(encode_f64(x, f, mode));
            let hi = finite(encode_f64(x + d, f, mode));
            if let (Some(lo), Some(hi)) = (lo, hi) {
                prop_assert!(lo <= hi, "{f} {mode:?}: {x} -> {lo}, {} -> {hi}", x + d);
            }
        }
    }

    #[test]
    fn toward_positive_never_rounds_down(f in format_strategy(), x in -1e5f64..1e5) {
        if x <= max_finite(f) {
            if let Some(v) = finite(encode_f64(x, f, RoundingMode::TowardPositive)) {
                prop_assert!(v >= x, "{f}: {x} -> {v}");
            }
        }
    }

    #[test]
    fn nearest_is_no_worse_than_toward_positive(f in format_strategy(), x in -1e3f64..1e3) {
        let near = finite(encode_f64(x, f, RoundingMode::NearestEven));
        let up = finite(encode_f64(x, f, RoundingMode::TowardPositive));
        if let (Some(n), Some(u)) = (near, up) {
            prop_assert!((n - x).abs() <= (u - x).abs(), "{f}: {x} nearest {n} up {u}");
        }
    }
}

#[test]
fn every_pattern_survives_a_round_trip_through_f64() {
    for f in FormatDescriptor::all_standard() {
        for s in EncodedScalar::all(f) {
            if let Some(v) = finite(s) {
                let back = encode_f64(v, f, RoundingMode::NearestEven);
                // Signed zeros may collapse; everything else is exact.
                assert!(back == s || v == 0.0, "{f} {} -> {v} -> {}", s.hex(), back.hex());
            }
        }
    }
}

#[test]
fn ofp8_saturation_and_nan() {
    let f: FormatDescriptor = "fp8e4m3".parse().unwrap();
    assert_eq!(encode_f64(448.0, f, RoundingMode::NearestEven).bits(), 0x7E);
    assert_eq!(encode_f64(1e9, f, RoundingMode::NearestEven).bits(), 0x7E);
    assert!(matches!(decode(EncodedScalar::wrap(0x7F, f)), Value::NaN));
    assert!(matches!(decode(EncodedScalar::wrap(0xFF, f)), Value::NaN));
}
