use polaron_core::formats::{decode, EncodedScalar, FormatDescriptor, RoundingMode, Value};
use polaron_core::mac::{dot_product, tile_multiply, Accumulation, MacConfig};
use polaron_core::oracle::{oracle_dot_scalars, oracle_round};
use proptest::prelude::*;

fn finite_scalar(f: FormatDescriptor) -> impl Strategy<Value = EncodedScalar> {
    (0u32..(1 << f.total_bits))
        .prop_map(move |b| EncodedScalar::wrap(b, f))
        .prop_filter("finite", |s| matches!(decode(*s), Value::Finite(_)))
}

fn format_strategy() -> impl Strategy<Value = FormatDescriptor> {
    prop::sample::select(FormatDescriptor::all_standard())
}

fn pair_vectors() -> impl Strategy<Value = (FormatDescriptor, Vec<EncodedScalar>, Vec<EncodedScalar>)> {
    format_strategy().prop_flat_map(|f| {
        (0usize..=40).prop_flat_map(move |n| {
            (Just(f), prop::collection::vec(finite_scalar(f), n), prop::collection::vec(finite_scalar(f), n))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 400, ..ProptestConfig::default() })]

    #[test]
    fn exact_dot_matches_oracle((f, a, b) in pair_vectors()) {
        let out = dot_product(&a, &b, &MacConfig::new(f)).unwrap();
        let exact = oracle_dot_scalars(&a, &b).unwrap();
        let want = oracle_round(&exact, f, RoundingMode::TowardPositive);
        prop_assert_eq!(decode(out.result), decode(want), "{} a={:?} b={:?}", f, a, b);
    }

    #[test]
    fn zero_skip_is_transparent((f, a, b) in pair_vectors()) {
        let on = dot_product(&a, &b, &MacConfig::new(f)).unwrap();
        let off = dot_product(&a, &b, &MacConfig::new(f).with_zero_skip(false)).unwrap();
        prop_assert_eq!(on.result, off.result);
        prop_assert_eq!(on.stats.vector_ops, off.stats.vector_ops);
        prop_assert!(on.stats.mac_ops <= off.stats.mac_ops);
    }

    #[test]
    fn exact_dot_is_permutation_invariant((f, a, b) in pair_vectors(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut idx: Vec<usize> = (0..a.len()).collect();
        idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let pa: Vec<_> = idx.iter().map(|&i| a[i]).collect();
        let pb: Vec<_> = idx.iter().map(|&i| b[i]).collect();
        let cfg = MacConfig::new(f);
        prop_assert_eq!(dot_product(&a, &b, &cfg).unwrap().result, dot_product(&pa, &pb, &cfg).unwrap().result);
    }

    #[test]
    fn align_to_max_agrees_when_nothing_is_discarded((f, a, b) in pair_vectors()) {
        prop_assume!(!f.is_fxp());
        let exact = dot_product(&a, &b, &MacConfig::new(f)).unwrap();
        let approx = dot_product(&a, &b, &MacConfig::new(f).with_accumulation(Accumulation::AlignToMax)).unwrap();
        prop_assert_eq!(exact.stats, approx.stats);
        // Both agree whenever no bits were discarded.
        if !approx.status.inexact {
            prop_assert_eq!(decode(exact.result), decode(approx.result));
        }
    }

    #[test]
    fn tile_multiply_16x16(a in 0u32..=0xFFFF, b in 0u32..=0xFFFF) {
        prop_assert_eq!(tile_multiply(a, b, 16), a as u64 * b as u64);
    }
}

#[test]
fn tile_multiply_8x8_exhaustive() {
    for a in 0..256u32 {
        for b in 0..256u32 {
            assert_eq!(tile_multiply(a, b, 8), (a * b) as u64);
        }
    }
}

#[test]
fn posit8_product_table_matches_oracle() {
    let f = FormatDescriptor::posit8();
    let cfg = MacConfig::new(f);
    for a in EncodedScalar::all(f) {
        for b in EncodedScalar::all(f) {
            let out = dot_product(&[a], &[b], &cfg).unwrap();
            let want = match oracle_dot_scalars(&[a], &[b]) {
                Some(x) => oracle_round(&x, f, RoundingMode::TowardPositive),
                None => EncodedScalar::wrap(f.nan_bits() as u32, f),
            };
            assert_eq!(out.result, want, "{} * {}", a.hex(), b.hex());
        }
    }
}
