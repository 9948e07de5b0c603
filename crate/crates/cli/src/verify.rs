//! Oracle-equivalence suites. Every suite is deterministic for a given seed;
//! mismatches are reported bit-exactly, at most ten per suite.

use polaron_core::formats::{decode, encode, encode_value, EncodedScalar, ExactReal, FormatDescriptor, Value};
use polaron_core::mac::{booth_multiply_4x4, dot_product, tile_multiply};
use polaron_core::oracle::{oracle_dot_scalars, oracle_round, RationalAcc};
use polaron_core::{MacConfig, RoundingMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Status, Suite, VerifyArgs};

const MAX_REPORTED: usize = 10;

#[derive(Default)]
struct Report {
    cases: u64,
    failures: u64,
    examples: Vec<String>,
}

impl Report {
    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        self.invariant(ok, describe);
    }

    /// A side condition that is not a case of its own.
    fn invariant(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        if !ok {
            self.failures += 1;
            if self.examples.len() < MAX_REPORTED {
                self.examples.push(describe());
            }
        }
    }
}

fn random_finite(f: FormatDescriptor, rng: &mut ChaCha8Rng, zero_rate: f64) -> EncodedScalar {
    if rng.random_bool(zero_rate) {
        return EncodedScalar::wrap(0, f);
    }
    loop {
        let s = EncodedScalar::wrap(rng.random_range(0..1u32 << f.total_bits), f);
        if decode(s).is_finite() {
            return s;
        }
    }
}

fn hex_list(v: &[EncodedScalar]) -> String {
    v.iter().map(|s| s.hex()).collect::<Vec<_>>().join(",")
}

fn codec_roundtrip(r: &mut Report) {
    for f in FormatDescriptor::all_standard() {
        let mut prev: Option<(EncodedScalar, ExactReal)> = None;
        for s in finite_by_value(f) {
            let v = decode(s);
            let back = encode_value(&v, f, RoundingMode::NearestEven);
            r.check(back == s, || format!("{f} {} decodes to {v} which encodes to {}", s.hex(), back.hex()));
            let x = v.finite().expect("finite").clone();
            if let Some((ps, px)) = &prev {
                let ordered = px.cmp_value(&x).is_lt() || (px.is_zero() && x.is_zero());
                r.invariant(ordered,|| format!("{f} {} and {} out of order", ps.hex(), s.hex()));
            }
            prev = Some((s, x));
        }
        for s in EncodedScalar::all(f).filter(|s| !decode(*s).is_finite()) {
            let v = decode(s);
            let back = encode_value(&v, f, RoundingMode::NearestEven);
            let ok = match v {
                Value::NaN | Value::NaR => matches!(decode(back), Value::NaN | Value::NaR),
                _ => back == s,
            };
            r.check(ok, || format!("{f} {} ({v}) encodes to {}", s.hex(), back.hex()));
        }
    }
}

/// Finite patterns of `f` in ascending order of the encoding's natural
/// ordinal (two's complement for fixed point and posits, sign-magnitude for
/// floats).
fn finite_by_value(f: FormatDescriptor) -> Vec<EncodedScalar> {
    let n = f.total_bits;
    let ordinal = |s: &EncodedScalar| -> i64 {
        let bits = s.bits() as i64;
        let neg = bits >> (n - 1) & 1 == 1;
        if f.is_fxp() || f.is_posit() {
            if neg {
                bits - (1 << n)
            } else {
                bits
            }
        } else {
            let mag = bits & ((1 << (n - 1)) - 1);
            if neg {
                -mag
            } else {
                mag
            }
        }
    };
    let mut v: Vec<EncodedScalar> = EncodedScalar::all(f).filter(|s| decode(*s).is_finite()).collect();
    v.sort_by_key(|s| (ordinal(s), s.bits()));
    v
}

fn expected_dot(a: &[EncodedScalar], b: &[EncodedScalar], f: FormatDescriptor) -> EncodedScalar {
    match oracle_dot_scalars(a, b) {
        Some(x) => oracle_round(&x, f, RoundingMode::TowardPositive),
        None => EncodedScalar::wrap(f.nan_bits() as u32, f),
    }
}

fn check_dot(r: &mut Report, a: &[EncodedScalar], b: &[EncodedScalar], cfg: &MacConfig) {
    let got = match dot_product(a, b, cfg) {
        Ok(o) => o.result,
        Err(e) => {
            r.check(false, || format!("{}: {e}", cfg.mode.format));
            return;
        }
    };
    let want = expected_dot(a, b, cfg.mode.format);
    r.check(got == want, || {
        format!("{} a=[{}] b=[{}] got {} want {}", cfg.mode.format, hex_list(a), hex_list(b), got.hex(), want.hex())
    });
}

/// Exhaustive finite product tables for 8-bit formats, then `trials` random
/// vectors (length up to 64, 10% zeros) per format.
fn dot_exact(r: &mut Report, trials: u64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for f in FormatDescriptor::all_standard() {
        let cfg = MacConfig::new(f);
        if f.total_bits <= 8 {
            let finite: Vec<EncodedScalar> = EncodedScalar::all(f).filter(|s| decode(*s).is_finite()).collect();
            for &x in &finite {
                for &y in &finite {
                    check_dot(r, &[x], &[y], &cfg);
                }
            }
        }
        for _ in 0..trials {
            let n = rng.random_range(0..=64);
            let a: Vec<_> = (0..n).map(|_| random_finite(f, &mut rng, 0.1)).collect();
            let b: Vec<_> = (0..n).map(|_| random_finite(f, &mut rng, 0.1)).collect();
            check_dot(r, &a, &b, &cfg);
        }
    }
}

/// 4096 MACs per mode must take 256 / 1024 / 4096 vector operations.
fn throughput(r: &mut Report, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for f in FormatDescriptor::all_standard() {
        let want = 4096 / MacConfig::new(f).mode.lanes as u64;
        let a: Vec<_> = (0..4096).map(|_| random_finite(f, &mut rng, 0.0)).collect();
        let b: Vec<_> = (0..4096).map(|_| random_finite(f, &mut rng, 0.0)).collect();
        match dot_product(&a, &b, &MacConfig::new(f)) {
            Ok(o) => r.check(o.stats.vector_ops == want, || {
                format!("{f}: {} vector ops for 4096 MACs, want {want}", o.stats.vector_ops)
            }),
            Err(e) => r.check(false, || format!("{f}: {e}")),
        }
    }
    let ops = |name: &str| 4096 / MacConfig::new(name.parse().expect("format")).mode.lanes as u64;
    let (x4, x8, x16) = (ops("fxp4"), ops("fxp8"), ops("fxp16"));
    r.check(x16 == 16 * x4 && x16 == 4 * x8, || format!("fxp16:fxp8:fxp4 vector ops {x16}:{x8}:{x4}, want 16:4:1"));
}

fn multiplier(r: &mut Report, trials: u64, seed: u64) {
    for a in 0..256u32 {
        for b in 0..256u32 {
            let p = tile_multiply(a, b, 8);
            r.check(p == (a * b) as u64, || format!("8x8 {a:#04x}*{b:#04x} = {p}, want {}", a * b));
        }
    }
    for a in -8i8..=7 {
        for b in -8i8..=7 {
            let p = booth_multiply_4x4(a, b);
            let want = (a as i16 * b as i16) as i8;
            r.check(p == want, || format!("booth {a}*{b} = {p}, want {want}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let (a, b) = (rng.random_range(0..=0xFFFFu32), rng.random_range(0..=0xFFFFu32));
        let p = tile_multiply(a, b, 16);
        r.check(p == a as u64 * b as u64, || format!("16x16 {a:#06x}*{b:#06x} = {p}"));
    }
}

/// `encode` against table-driven oracle rounding on random dyadic rationals
/// spanning each format's range, in both rounding modes.
fn oracle_encode(r: &mut Report, trials: u64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for f in FormatDescriptor::all_standard() {
        let lo = f.min_lsb_scale() - 4;
        let hi = f.max_scale() + 3;
        for _ in 0..trials {
            let mag_bits = rng.random_range(1..=24u32);
            let mag = rng.random_range(1..1u64 << mag_bits);
            let top = rng.random_range(lo..=hi);
            let x = ExactReal::from_parts(rng.random_bool(0.5), mag, top - mag_bits as i32 + 1);
            for mode in [RoundingMode::NearestEven, RoundingMode::TowardPositive] {
                let got = encode(&x, f, mode);
                let want = oracle_round(&RationalAcc::from_exact(&x), f, mode);
                r.check(got == want, || format!("{f} {mode:?} {x}: encode {} oracle {}", got.hex(), want.hex()));
            }
        }
    }
}

pub fn run(a: &VerifyArgs) -> anyhow::Result<Status> {
    let suites: &[Suite] = match a.suite {
        Suite::All => &[Suite::CodecRoundtrip, Suite::DotExact, Suite::Throughput, Suite::Multiplier, Suite::OracleEncode],
        ref s => std::slice::from_ref(s),
    };
    let mut all_pass = true;
    for &suite in suites {
        let mut r = Report::default();
        let name = match suite {
            Suite::CodecRoundtrip => {
                codec_roundtrip(&mut r);
                "codec-roundtrip"
            }
            Suite::DotExact => {
                dot_exact(&mut r, a.trials, a.seed);
                "dot-exact"
            }
            Suite::Throughput => {
                throughput(&mut r, a.seed);
                "throughput"
            }
            Suite::Multiplier => {
                multiplier(&mut r, a.trials, a.seed);
                "multiplier"
            }
            Suite::OracleEncode => {
                oracle_encode(&mut r, a.trials, a.seed);
                "oracle-encode"
            }
            Suite::All => unreachable!(),
        };
        let verdict = if r.failures == 0 { "pass" } else { "FAIL" };
        println!("{name}: {verdict} ({} cases, {} failures)", r.cases, r.failures);
        for e in &r.examples {
            println!("  {e}");
        }
        all_pass &= r.failures == 0;
    }
    Ok(if all_pass { Status::Ok } else { Status::VerifyFailed })
}
