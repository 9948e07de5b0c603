//! Shared inputs for the benchmarks.

use polaron_core::formats::{decode, EncodedScalar, FormatDescriptor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` random finite operands of `f`, reproducible from `seed`.
pub fn random_operands(f: FormatDescriptor, n: usize, seed: u64) -> Vec<EncodedScalar> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| loop {
            let s = EncodedScalar::wrap(rng.random_range(0..1u32 << f.total_bits), f);
            if decode(s).is_finite() {
                break s;
            }
        })
        .collect()
}

/// Operands with roughly `zero_rate` of them replaced by zero.
pub fn sparse_operands(f: FormatDescriptor, n: usize, zero_rate: f64, seed: u64) -> Vec<EncodedScalar> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    random_operands(f, n, seed)
        .into_iter()
        .map(|s| if rng.random_bool(zero_rate) { EncodedScalar::wrap(0, f) } else { s })
        .collect()
}
