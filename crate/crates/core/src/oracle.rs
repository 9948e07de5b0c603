//! Independent exact-arithmetic reference.
//!
//! Deliberately slow and obviously correct: sums are exact rationals with
//! power-of-two denominators, and rounding scans the sorted table of every
//! finite value of the target format, obtained through [`decode`] alone. No
//! multiplier, alignment, accumulator or rounding code from the datapath is
//! used here.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::{BigInt, Sign};
use num_traits::{Signed, Zero};

use crate::formats::{decode, EncodedScalar, ExactReal, FormatDescriptor, RoundingMode, Value};

/// `num * 2^exp` with `num` odd (or zero, with `exp = 0`).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalAcc {
    num: BigInt,
    exp: i32,
}

impl RationalAcc {
    pub fn zero() -> Self {
        RationalAcc { num: BigInt::zero(), exp: 0 }
    }

    pub fn new(num: BigInt, exp: i32) -> Self {
        let mut r = RationalAcc { num, exp };
        r.normalize();
        r
    }

    fn normalize(&mut self) {
        match self.num.trailing_zeros() {
            None => self.exp = 0,
            Some(0) => {}
            Some(tz) => {
                self.num >>= tz as usize;
                self.exp += tz as i32;
            }
        }
    }

    pub fn from_exact(x: &ExactReal) -> Self {
        let sign = if x.is_negative() { Sign::Minus } else { Sign::Plus };
        Self::new(BigInt::from_biguint(sign, x.magnitude().clone()), x.exponent())
    }

    pub fn from_int(v: i64) -> Self {
        Self::new(BigInt::from(v), 0)
    }

    pub fn to_exact(&self) -> ExactReal {
        ExactReal::new(self.num.is_negative(), self.num.magnitude().clone(), self.exp)
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    /// Power-of-two exponent; the denominator is `2^-exp` when negative.
    pub fn exponent(&self) -> i32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn to_f64(&self) -> f64 {
        self.to_exact().to_f64()
    }

    /// `2^k * self` (exact).
    pub fn scaled(&self, k: i32) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        RationalAcc { num: self.num.clone(), exp: self.exp + k }
    }

    fn aligned(&self, other: &Self) -> (BigInt, BigInt, i32) {
        let m = self.exp.min(other.exp);
        (&self.num << (self.exp - m) as usize, &other.num << (other.exp - m) as usize, m)
    }
}

impl Add for &RationalAcc {
    type Output = RationalAcc;
    fn add(self, rhs: &RationalAcc) -> RationalAcc {
        let (a, b, m) = self.aligned(rhs);
        RationalAcc::new(a + b, m)
    }
}

impl Sub for &RationalAcc {
    type Output = RationalAcc;
    fn sub(self, rhs: &RationalAcc) -> RationalAcc {
        let (a, b, m) = self.aligned(rhs);
        RationalAcc::new(a - b, m)
    }
}

impl Mul for &RationalAcc {
    type Output = RationalAcc;
    fn mul(self, rhs: &RationalAcc) -> RationalAcc {
        RationalAcc::new(&self.num * &rhs.num, self.exp + rhs.exp)
    }
}

impl Neg for &RationalAcc {
    type Output = RationalAcc;
    fn neg(self) -> RationalAcc {
        RationalAcc { num: -&self.num, exp: self.exp }
    }
}

impl Ord for RationalAcc {
    fn cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.num.sign(), other.num.sign());
        if sa != sb {
            let rank = |s: Sign| match s {
                Sign::Minus => 0,
                Sign::NoSign => 1,
                Sign::Plus => 2,
            };
            return rank(sa).cmp(&rank(sb));
        }
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl PartialOrd for RationalAcc {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for RationalAcc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} * 2^{}", self.num, self.exp)
    }
}

impl fmt::Display for RationalAcc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_exact())
    }
}

/// Exact `sum(a[i] * b[i])`.
pub fn oracle_dot(a: &[ExactReal], b: &[ExactReal]) -> RationalAcc {
    assert_eq!(a.len(), b.len(), "oracle_dot needs equal lengths");
    a.iter().zip(b).fold(RationalAcc::zero(), |acc, (x, y)| {
        &acc + &(&RationalAcc::from_exact(x) * &RationalAcc::from_exact(y))
    })
}

/// Exact dot product of encoded operands, or `None` if any is not finite.
pub fn oracle_dot_scalars(a: &[EncodedScalar], b: &[EncodedScalar]) -> Option<RationalAcc> {
    let finite = |s: &EncodedScalar| match decode(*s) {
        Value::Finite(x) => Some(x),
        _ => None,
    };
    let xa: Option<Vec<_>> = a.iter().map(finite).collect();
    let xb: Option<Vec<_>> = b.iter().map(finite).collect();
    Some(oracle_dot(&xa?, &xb?))
}

/// Every finite value of a format, ascending, with one pattern per value
/// (`+0` stands for both zeros).
struct ValueTable {
    entries: Vec<(RationalAcc, u16)>,
}

fn table_for(f: FormatDescriptor) -> Arc<ValueTable> {
    static CACHE: OnceLock<Mutex<HashMap<FormatDescriptor, Arc<ValueTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().unwrap().get(&f) {
        return t.clone();
    }
    let mut entries: Vec<(RationalAcc, u16)> = EncodedScalar::all(f)
        .filter_map(|s| match decode(s) {
            Value::Finite(x) if !(x.is_zero() && s.bits() != 0) => Some((RationalAcc::from_exact(&x), s.bits())),
            _ => None,
        })
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let t = Arc::new(ValueTable { entries });
    cache.lock().unwrap().insert(f, t.clone());
    t
}

/// Rounds `x` into `f` by locating its neighbours among all finite values.
///
/// Out-of-range values saturate except where the format has infinities;
/// there nearest rounding overflows from `max + ulp/2` upward and rounding
/// toward +inf overflows positive values only. Posits never round a nonzero
/// value to zero under nearest rounding. A negative value that rounds to
/// zero gives `-0` where the format has one.
pub fn oracle_round(x: &RationalAcc, f: FormatDescriptor, mode: RoundingMode) -> EncodedScalar {
    let wrap = |bits: u16| EncodedScalar::wrap(bits as u32, f);
    let table = table_for(f);
    let e = &table.entries;
    let neg = x.is_negative();
    let zero_bits = |bits: u16, tv: &RationalAcc| if tv.is_zero() { f.zero_bits(neg) } else { bits };
    // Index of the first entry >= x.
    let idx = e.partition_point(|(v, _)| v < x);
    if idx < e.len() && e[idx].0 == *x {
        return wrap(zero_bits(e[idx].1, &e[idx].0));
    }
    let lo = idx.checked_sub(1).map(|i| &e[i]);
    let hi = e.get(idx);
    let pick = |entry: &(RationalAcc, u16)| wrap(zero_bits(entry.1, &entry.0));
    match (lo, hi) {
        (None, Some(h)) => {
            // Below the most negative finite value.
            match mode {
                RoundingMode::TowardPositive => pick(h),
                RoundingMode::NearestEven => {
                    if f.has_inf() && *x <= -&overflow_threshold(e) {
                        wrap(f.inf_bits(true))
                    } else {
                        pick(h)
                    }
                }
            }
        }
        (Some(l), None) => match mode {
            RoundingMode::TowardPositive if f.has_inf() => wrap(f.inf_bits(false)),
            RoundingMode::NearestEven if f.has_inf() && *x >= overflow_threshold(e) => wrap(f.inf_bits(false)),
            _ => pick(l),
        },
        (Some(l), Some(h)) => match mode {
            RoundingMode::TowardPositive => pick(h),
            RoundingMode::NearestEven => {
                if f.is_posit() && (l.0.is_zero() || h.0.is_zero()) {
                    return pick(if l.0.is_zero() { h } else { l });
                }
                let dl = x - &l.0;
                let dh = &h.0 - x;
                match dl.cmp(&dh) {
                    Ordering::Less => pick(l),
                    Ordering::Greater => pick(h),
                    Ordering::Equal => pick(if l.1 & 1 == 0 { l } else { h }),
                }
            }
        },
        (None, None) => unreachable!("format without finite values"),
    }
}

/// `max + (max - prev) / 2` over the positive end of the table.
fn overflow_threshold(e: &[(RationalAcc, u16)]) -> RationalAcc {
    let max = &e[e.len() - 1].0;
    let prev = &e[e.len() - 2].0;
    max + &(max - prev).scaled(-1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::encode;

    fn r(num: i64, exp: i32) -> RationalAcc {
        RationalAcc::new(BigInt::from(num), exp)
    }

    #[test]
    fn dot_examples() {
        assert!(oracle_dot(&[], &[]).is_zero());
        let x = ExactReal::from_parts(true, 5, -3);
        assert_eq!(oracle_dot(&[ExactReal::from_int(1)], std::slice::from_ref(&x)), RationalAcc::from_exact(&x));
        let a = [ExactReal::from_parts(false, 3, -3), ExactReal::from_parts(true, 1, -1)];
        let b = [ExactReal::from_int(2), ExactReal::from_int(4)];
        assert_eq!(oracle_dot(&a, &b), r(-5, -2));
    }

    #[test]
    fn normalization_is_minimal() {
        let v = r(12, -5);
        assert_eq!(v.numerator(), &BigInt::from(3));
        assert_eq!(v.exponent(), -3);
        assert_eq!(r(0, 7).exponent(), 0);
    }

    #[test]
    fn representable_values_round_to_themselves() {
        for f in [FormatDescriptor::fp8_e4m3(), FormatDescriptor::posit8(), "fxp8:f3".parse().unwrap()] {
            for s in EncodedScalar::all(f) {
                if let Value::Finite(x) = decode(s) {
                    // Rationals carry no sign on zero.
                    if x.is_zero() && x.is_negative() {
                        continue;
                    }
                    let got = oracle_round(&RationalAcc::from_exact(&x), f, RoundingMode::NearestEven);
                    assert_eq!(decode(got), decode(s), "{f} {}", s.hex());
                }
            }
        }
    }

    #[test]
    fn e4m3_midpoint_goes_to_even() {
        let f = FormatDescriptor::fp8_e4m3();
        // Between 1.0 (0x38) and 1.125 (0x39).
        let mid = r(17, -4);
        assert_eq!(oracle_round(&mid, f, RoundingMode::NearestEven).bits(), 0x38);
        assert_eq!(oracle_round(&mid, f, RoundingMode::TowardPositive).bits(), 0x39);
        assert_eq!(oracle_round(&r(1000, 0), f, RoundingMode::NearestEven).bits(), 0x7E);
    }

    #[test]
    fn ieee_overflow_and_negative_zero() {
        let f = FormatDescriptor::fp8_e5m2();
        // max 57344, prev 49152, threshold 61440.
        assert_eq!(oracle_round(&r(61439, 0), f, RoundingMode::NearestEven).bits(), 0x7B);
        assert_eq!(oracle_round(&r(61440, 0), f, RoundingMode::NearestEven).bits(), 0x7C);
        assert_eq!(oracle_round(&r(-61440, 0), f, RoundingMode::NearestEven).bits(), 0xFC);
        assert_eq!(oracle_round(&r(-70000, 0), f, RoundingMode::TowardPositive).bits(), 0xFB);
        assert_eq!(oracle_round(&r(-1, -40), f, RoundingMode::TowardPositive).bits(), 0x80);
    }

    #[test]
    fn agrees_with_encode_on_perturbed_values() {
        for f in FormatDescriptor::all_standard().into_iter().filter(|f| f.total_bits == 8) {
            for s in EncodedScalar::all(f) {
                let Value::Finite(x) = decode(s) else { continue };
                let base = RationalAcc::from_exact(&x);
                let tiny = r(1, base.exponent() - 12);
                for v in [&base + &tiny, &base - &tiny] {
                    for mode in [RoundingMode::NearestEven, RoundingMode::TowardPositive] {
                        let want = oracle_round(&v, f, mode);
                        let got = encode(&v.to_exact(), f, mode);
                        assert_eq!(got, want, "{f} {} {mode:?} {v}", s.hex());
                    }
                }
            }
        }
    }
}
