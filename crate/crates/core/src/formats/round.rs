//! Rounding and re-encoding.
//!
//! Both [`encode`] (exact real to pattern) and [`pack_normalize_round`]
//! (accumulator to pattern) reduce their input to a normalized 64-bit
//! window plus a sticky bit and share [`round_finite`].

use std::cmp::Ordering;

use super::codec::posit_fields;
use super::{EncodedScalar, ExactReal, FormatDescriptor, FormatKind, RoundingMode, Value};
use crate::wide::WideInt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RoundStatus {
    /// The value was outside the finite range and was saturated (or became
    /// an infinity).
    pub overflow: bool,
    pub inexact: bool,
    /// A NaN / NaR / invalid operation reached the output.
    pub invalid: bool,
}

impl RoundStatus {
    pub fn merge(self, other: RoundStatus) -> RoundStatus {
        RoundStatus {
            overflow: self.overflow | other.overflow,
            inexact: self.inexact | other.inexact,
            invalid: self.invalid | other.invalid,
        }
    }
}

/// Output-stage result: the pattern plus sticky status flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packed {
    pub scalar: EncodedScalar,
    pub status: RoundStatus,
}

/// Rounds `v * 2^-shift` to an integer: returns the truncated quotient, the
/// round (first discarded) bit and the sticky OR of the rest.
fn shift_right_round(v: u64, sticky_in: bool, shift: u32) -> (u64, bool, bool) {
    match shift {
        0 => (v, false, sticky_in),
        1..=64 => {
            let kept = if shift == 64 { 0 } else { v >> shift };
            let round = (v >> (shift - 1)) & 1 == 1;
            let below = if shift == 1 { 0 } else { v & (u64::MAX >> (65 - shift)) };
            (kept, round, sticky_in || below != 0)
        }
        _ => (0, false, sticky_in || v != 0),
    }
}

fn round_up(mode: RoundingMode, negative: bool, kept_odd: bool, round: bool, sticky: bool) -> bool {
    match mode {
        RoundingMode::NearestEven => round && (sticky || kept_odd),
        RoundingMode::TowardPositive => !negative && (round || sticky),
    }
}

/// Rounds the non-zero value `(-1)^negative * frac * 2^(scale - 63)` (plus an
/// infinitesimal when `sticky`) into `f`. `frac` must have bit 63 set.
pub(crate) fn round_finite(
    negative: bool,
    scale: i32,
    frac: u64,
    sticky: bool,
    f: &FormatDescriptor,
    mode: RoundingMode,
) -> (u16, RoundStatus) {
    debug_assert!(frac >> 63 == 1);
    match f.kind {
        FormatKind::Fxp => round_fxp(negative, scale, frac, sticky, f, mode),
        FormatKind::Float | FormatKind::Bfloat => round_float(negative, scale, frac, sticky, f, mode),
        FormatKind::Posit => round_posit(negative, scale, frac, sticky, f, mode),
    }
}

fn round_fxp(
    negative: bool,
    scale: i32,
    frac: u64,
    sticky: bool,
    f: &FormatDescriptor,
    mode: RoundingMode,
) -> (u16, RoundStatus) {
    let n = f.total_bits;
    let shift = 63 - scale as i64 - f.frac_bits as i64;
    let max = (1i64 << (n - 1)) - 1;
    let min = -(1i64 << (n - 1));
    let (code, inexact) = if shift <= 0 {
        (if negative { i64::MIN } else { i64::MAX }, false)
    } else {
        let (kept, round, st) = shift_right_round(frac, sticky, shift.min(200) as u32);
        let mag = kept as i128 + round_up(mode, negative, kept & 1 == 1, round, st) as i128;
        let code = if negative { -mag } else { mag };
        (code.clamp(i64::MIN as i128, i64::MAX as i128) as i64, round || st)
    };
    let clamped = code.clamp(min, max);
    let status = RoundStatus { overflow: clamped != code, inexact: inexact || clamped != code, invalid: false };
    ((clamped as u64 & f.mask() as u64) as u16, status)
}

fn round_float(
    negative: bool,
    scale: i32,
    frac: u64,
    sticky: bool,
    f: &FormatDescriptor,
    mode: RoundingMode,
) -> (u16, RoundStatus) {
    let mant = f.mant_bits;
    let mut e = scale.max(f.emin());
    let shift = (63 - mant as i64 + (e - scale) as i64).min(200) as u32;
    let (kept, round, st) = shift_right_round(frac, sticky, shift);
    let inexact = round || st;
    let mut m = kept + round_up(mode, negative, kept & 1 == 1, round, st) as u64;
    let sign = (negative as u32) << (f.total_bits - 1);
    if m == 0 {
        return (f.zero_bits(negative), RoundStatus { inexact, ..Default::default() });
    }
    if m >> (mant + 1) != 0 {
        m >>= 1;
        e += 1;
    }
    let (biased, field) = if m < (1 << mant) { (0, m as u32) } else { ((e + f.bias) as u32, (m - (1 << mant)) as u32) };
    let overflow = e > f.emax() || (f.is_ofp8_e4m3() && e == f.emax() && field > 6);
    if overflow {
        let bits = if !f.has_inf() {
            f.max_finite_bits(negative)
        } else {
            match mode {
                RoundingMode::NearestEven => f.inf_bits(negative),
                RoundingMode::TowardPositive if negative => f.max_finite_bits(true),
                RoundingMode::TowardPositive => f.inf_bits(false),
            }
        };
        return (bits, RoundStatus { overflow: true, inexact: true, invalid: false });
    }
    ((sign | (biased << mant) | field) as u16, RoundStatus { inexact, ..Default::default() })
}

/// Truncated positive posit pattern for `frac * 2^(scale - 63)` with
/// `|scale| <= maxpos scale`, and whether any bit was discarded.
fn posit_truncate(scale: i32, frac: u64, n: u32, es: u32) -> (u32, bool) {
    let k = scale >> es;
    let e = (scale & ((1 << es) - 1)) as u128;
    let (regime, reg_len) = if k >= 0 {
        let ones = k as u32 + 1;
        (((1u128 << ones) - 1) << 1, ones + 1)
    } else {
        (1u128, (-k) as u32 + 1)
    };
    let body = (((regime << es) | e) << 63) | (frac & (u64::MAX >> 1)) as u128;
    let len = reg_len + es + 63;
    let keep = n - 1;
    debug_assert!(len > keep);
    let drop = len - keep;
    ((body >> drop) as u32, body & ((1u128 << drop) - 1) != 0)
}

/// `(significand, exponent)` of a positive posit magnitude pattern.
fn posit_magnitude(pattern: u32, f: &FormatDescriptor) -> (u128, i32) {
    let (scale, frac, frac_len) = posit_fields(pattern, f.total_bits, f.es);
    (((1u32 << frac_len) | frac) as u128, scale - frac_len as i32)
}

fn cmp_dyadic(a: u128, ea: i32, b: u128, eb: i32) -> Ordering {
    let top_a = 128 - a.leading_zeros() as i32 + ea;
    let top_b = 128 - b.leading_zeros() as i32 + eb;
    if top_a != top_b {
        return top_a.cmp(&top_b);
    }
    if ea >= eb {
        (a << (ea - eb)).cmp(&b)
    } else {
        a.cmp(&(b << (eb - ea)))
    }
}

fn round_posit(
    negative: bool,
    scale: i32,
    frac: u64,
    sticky: bool,
    f: &FormatDescriptor,
    mode: RoundingMode,
) -> (u16, RoundStatus) {
    let n = f.total_bits;
    let max_scale = f.posit_max_scale();
    let maxpos = (1u32 << (n - 1)) - 1;
    let apply_sign = |mag: u32| -> u16 {
        if negative {
            (mag.wrapping_neg() & f.mask()) as u16
        } else {
            mag as u16
        }
    };
    let above_max = scale > max_scale || (scale == max_scale && (frac != 1 << 63 || sticky));
    if above_max {
        // Posits saturate; rounding a negative value toward +inf lands on
        // -maxpos without overflowing.
        let overflow = !(mode == RoundingMode::TowardPositive && negative);
        return (apply_sign(maxpos), RoundStatus { overflow, inexact: true, invalid: false });
    }
    let (lo, dropped) = if scale < -max_scale { (0, true) } else { posit_truncate(scale, frac, n, f.es) };
    if !dropped && !sticky {
        return (apply_sign(lo), RoundStatus::default());
    }
    let hi = lo + 1;
    let pick_hi = match mode {
        RoundingMode::TowardPositive => !negative,
        // Nonzero values never round to zero.
        RoundingMode::NearestEven if lo == 0 => true,
        RoundingMode::NearestEven => {
            let (s_lo, e_lo) = posit_magnitude(lo, f);
            let (s_hi, e_hi) = posit_magnitude(hi, f);
            let e_min = e_lo.min(e_hi);
            let sum = (s_lo << (e_lo - e_min)) + (s_hi << (e_hi - e_min));
            // Compare 2|x| with lo + hi.
            match cmp_dyadic(frac as u128, scale - 62, sum, e_min) {
                Ordering::Less => false,
                Ordering::Greater => true,
                Ordering::Equal if sticky => true,
                Ordering::Equal => hi & 1 == 0,
            }
        }
    };
    let mag = if pick_hi { hi } else { lo };
    (apply_sign(mag), RoundStatus { inexact: true, ..Default::default() })
}

/// Nearest representable pattern to `x` under `mode`.
///
/// Posits saturate at maxpos and never round a nonzero value to zero under
/// nearest rounding; fixed-point clamps; OFP8 E4M3 saturates to ±448; other
/// Float formats overflow to infinity per IEEE rules.
pub fn encode(x: &ExactReal, f: FormatDescriptor, mode: RoundingMode) -> EncodedScalar {
    encode_with_status(x, f, mode).0
}

pub(crate) fn encode_with_status(x: &ExactReal, f: FormatDescriptor, mode: RoundingMode) -> (EncodedScalar, RoundStatus) {
    if x.is_zero() {
        return (EncodedScalar::wrap(f.zero_bits(x.is_negative()) as u32, f), RoundStatus::default());
    }
    let mag = x.magnitude();
    let b = mag.bits() as u32;
    let scale = x.exponent() + b as i32 - 1;
    let (frac, sticky) = if b <= 64 {
        let digits = mag.to_u64_digits();
        (digits[0] << (64 - b), false)
    } else {
        let drop = (b - 64) as usize;
        let top = (mag >> drop).to_u64_digits()[0];
        (top, mag.trailing_zeros().unwrap_or(0) < drop as u64)
    };
    let (bits, status) = round_finite(x.is_negative(), scale, frac, sticky, &f, mode);
    (EncodedScalar::wrap(bits as u32, f), status)
}

/// [`encode`] extended to special values.
pub fn encode_value(v: &Value, f: FormatDescriptor, mode: RoundingMode) -> EncodedScalar {
    match v {
        Value::Finite(x) => encode(x, f, mode),
        Value::Inf { negative } => EncodedScalar::wrap(f.inf_bits(*negative) as u32, f),
        Value::NaN | Value::NaR => EncodedScalar::wrap(f.nan_bits() as u32, f),
    }
}

pub fn encode_f64(x: f64, f: FormatDescriptor, mode: RoundingMode) -> EncodedScalar {
    match ExactReal::from_f64(x) {
        Some(e) => encode(&e, f, mode),
        None if x.is_nan() => EncodedScalar::wrap(f.nan_bits() as u32, f),
        None => EncodedScalar::wrap(f.inf_bits(x < 0.0) as u32, f),
    }
}

/// Output stage: normalizes the accumulator `sum * 2^scale_anchor` and rounds
/// it toward +inf into `f`.
///
/// Float and posit outputs locate the leading one (the LZA step), shift it to
/// the top of a 64-bit window and round. Fixed-point outputs skip exponent
/// handling entirely: the sum is shifted to the output binary point, rounded
/// up on any discarded one-bit, and saturated.
pub fn pack_normalize_round(sum: &WideInt, scale_anchor: i32, f: FormatDescriptor) -> Packed {
    if sum.is_zero() {
        return Packed { scalar: EncodedScalar::wrap(0, f), status: RoundStatus::default() };
    }
    if f.is_fxp() {
        return pack_fxp(sum, scale_anchor, f);
    }
    let negative = sum.is_negative();
    let mag = sum.abs();
    let lead = mag.bit_len();
    let scale = scale_anchor + lead as i32 - 1;
    let (frac, sticky) = if lead >= 64 {
        (mag.window64(lead - 64), mag.any_below(lead - 64))
    } else {
        (mag.limbs()[0] << (64 - lead), false)
    };
    let (bits, status) = round_finite(negative, scale, frac, sticky, &f, RoundingMode::TowardPositive);
    Packed { scalar: EncodedScalar::wrap(bits as u32, f), status }
}

fn pack_fxp(sum: &WideInt, scale_anchor: i32, f: FormatDescriptor) -> Packed {
    let n = f.total_bits;
    let t = scale_anchor + f.frac_bits as i32;
    let (code, inexact) = if t >= 0 {
        let fits = (t as u32) < sum.bits() && sum.shl(t as u32).shr_sticky(t as u32).0 == *sum;
        if !fits {
            let bits = f.max_finite_bits(sum.is_negative());
            let status = RoundStatus { overflow: true, inexact: true, invalid: false };
            return Packed { scalar: EncodedScalar::wrap(bits as u32, f), status };
        }
        (sum.shl(t as u32), false)
    } else {
        let (q, sticky) = sum.shr_sticky((-t) as u32);
        let q = if sticky { q.wrapping_add(&WideInt::from_u64(1, q.len())) } else { q };
        (q, sticky)
    };
    if !code.fits_signed(n) {
        let bits = f.max_finite_bits(code.is_negative());
        let status = RoundStatus { overflow: true, inexact: true, invalid: false };
        return Packed { scalar: EncodedScalar::wrap(bits as u32, f), status };
    }
    let bits = code.limbs()[0] as u32 & f.mask();
    Packed { scalar: EncodedScalar::wrap(bits, f), status: RoundStatus { inexact, ..Default::default() } }
}

#[cfg(test)]
mod tests {
    use super::super::decode;
    use super::*;

    fn p8() -> FormatDescriptor {
        FormatDescriptor::posit8()
    }

    #[test]
    fn posit_saturates_and_never_underflows() {
        let big = ExactReal::from_parts(false, 1, 30);
        assert_eq!(encode(&big, p8(), RoundingMode::NearestEven).bits(), 0x7F);
        assert_eq!(encode(&big.neg(), p8(), RoundingMode::NearestEven).bits(), 0x81);
        let tiny = ExactReal::from_parts(false, 1, -40);
        assert_eq!(encode(&tiny, p8(), RoundingMode::NearestEven).bits(), 0x01);
        assert_eq!(encode(&tiny.neg(), p8(), RoundingMode::NearestEven).bits(), 0xFF);
        // Directed rounding of a tiny negative goes to zero.
        assert_eq!(encode(&tiny.neg(), p8(), RoundingMode::TowardPositive).bits(), 0x00);
        // 2^20 is exactly representable (0x7E).
        assert_eq!(encode(&ExactReal::from_parts(false, 1, 20), p8(), RoundingMode::NearestEven).bits(), 0x7E);
    }

    #[test]
    fn posit_nearest_is_by_value() {
        // Between 2^20 (0x7E) and 2^24 (0x7F) the arithmetic midpoint is
        // 2^23 + 2^19; 2^22 is below it.
        let x = ExactReal::from_parts(false, 1, 22);
        assert_eq!(encode(&x, p8(), RoundingMode::NearestEven).bits(), 0x7E);
        let mid = ExactReal::from_parts(false, 17, 19);
        // Tie: 0x7E is the even pattern.
        assert_eq!(encode(&mid, p8(), RoundingMode::NearestEven).bits(), 0x7E);
        let above = ExactReal::from_parts(false, 35, 18);
        assert_eq!(encode(&above, p8(), RoundingMode::NearestEven).bits(), 0x7F);
    }

    #[test]
    fn e4m3_rounding() {
        let f = FormatDescriptor::fp8_e4m3();
        let third = ExactReal::new(false, num_bigint::BigUint::from(0x5555_5555_5555_5555u64), -64);
        let up = encode(&third, f, RoundingMode::TowardPositive);
        let v = decode(up).to_f64();
        assert!(v >= 1.0 / 3.0);
        assert_eq!(up.bits(), 0x2B); // 0.34375 = 1.375 * 2^-2
        assert_eq!(encode(&ExactReal::from_int(1000), f, RoundingMode::NearestEven).bits(), 0x7E);
        assert_eq!(encode(&ExactReal::from_int(-1000), f, RoundingMode::TowardPositive).bits(), 0xFE);
        // Midway between 1.0 and 1.125 -> upper neighbour under RTP, even under RNE.
        let mid = ExactReal::from_parts(false, 17, -4);
        assert_eq!(encode(&mid, f, RoundingMode::TowardPositive).bits(), 0x39);
        assert_eq!(encode(&mid, f, RoundingMode::NearestEven).bits(), 0x38);
    }

    #[test]
    fn ieee_overflow_rules() {
        let f = FormatDescriptor::fp8_e5m2();
        let huge = ExactReal::from_int(1 << 20);
        assert_eq!(encode(&huge, f, RoundingMode::NearestEven).bits(), 0x7C);
        assert_eq!(encode(&huge, f, RoundingMode::TowardPositive).bits(), 0x7C);
        assert_eq!(encode(&huge.neg(), f, RoundingMode::TowardPositive).bits(), 0xFB);
        assert_eq!(encode(&huge.neg(), f, RoundingMode::NearestEven).bits(), 0xFC);
        // Tiny negatives round to -0.
        let tiny = ExactReal::from_parts(true, 1, -40);
        assert_eq!(encode(&tiny, f, RoundingMode::TowardPositive).bits(), 0x80);
        assert_eq!(encode(&tiny, f, RoundingMode::NearestEven).bits(), 0x80);
        assert_eq!(encode(&tiny.neg(), f, RoundingMode::TowardPositive).bits(), 0x01);
    }

    #[test]
    fn fxp_rounding_and_clamp() {
        let f = FormatDescriptor::fxp(8, 4).unwrap();
        assert_eq!(encode(&ExactReal::from_int(-1), f, RoundingMode::NearestEven).bits(), 0xF0);
        assert_eq!(encode(&ExactReal::from_int(100), f, RoundingMode::NearestEven).bits(), 0x7F);
        assert_eq!(encode(&ExactReal::from_int(-100), f, RoundingMode::NearestEven).bits(), 0x80);
        // -1/32 is half a step: ties-to-even gives 0, toward +inf gives 0.
        let h = ExactReal::from_parts(true, 1, -5);
        assert_eq!(encode(&h, f, RoundingMode::NearestEven).bits(), 0x00);
        assert_eq!(encode(&h, f, RoundingMode::TowardPositive).bits(), 0x00);
        assert_eq!(encode(&h.neg(), f, RoundingMode::TowardPositive).bits(), 0x01);
    }

    #[test]
    fn pack_zero_and_exact() {
        let f = FormatDescriptor::fp8_e4m3();
        let z = pack_normalize_round(&WideInt::zero(2), -10, f);
        assert_eq!(z.scalar.bits(), 0);
        // 6.0 = 3 * 2^1 anchored at 2^1.
        let six = pack_normalize_round(&WideInt::from_u64(3, 2), 1, f);
        assert_eq!(decode(six.scalar).to_f64(), 6.0);
        assert!(!six.status.inexact);
        let neg = pack_normalize_round(&WideInt::from_i128(-3, 2), 1, f);
        assert_eq!(decode(neg.scalar).to_f64(), -6.0);
    }

    #[test]
    fn pack_fxp_shift_and_saturate() {
        let f = FormatDescriptor::fxp(8, 4).unwrap();
        // 0b1011 * 2^-6 = 0.171875 -> ceil to 3/16
        let p = pack_normalize_round(&WideInt::from_u64(0b1011, 2), -6, f);
        assert_eq!(p.scalar.bits(), 3);
        let p = pack_normalize_round(&WideInt::from_i128(-0b1011, 2), -6, f);
        assert_eq!(p.scalar.bits(), 0xFE);
        let p = pack_normalize_round(&WideInt::from_u64(1, 2), 10, f);
        assert!(p.status.overflow);
        assert_eq!(p.scalar.bits(), 0x7F);
    }
}
