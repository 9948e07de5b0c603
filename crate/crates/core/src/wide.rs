//! Fixed-width two's-complement integers for the accumulator datapath.
//!
//! A [`WideInt`] is a little-endian array of 64-bit limbs. Arithmetic wraps
//! modulo `2^(64 * len)`; callers choose `len` large enough that every value
//! of interest fits with at least one spare bit, and detect overflow against
//! a narrower architectural width with [`WideInt::fits_signed`].

use num_bigint::{BigInt, BigUint, Sign};
use std::cmp::Ordering;
use std::fmt;

/// Largest supported container, 640 bits. The widest default accumulator
/// (BF16 Kulisch) needs 554 bits.
pub const MAX_LIMBS: usize = 10;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct WideInt {
    limbs: [u64; MAX_LIMBS],
    len: u8,
}

impl WideInt {
    /// Number of limbs needed to hold a signed value of `width_bits` with a
    /// spare bit above it.
    pub fn limbs_for_width(width_bits: u32) -> usize {
        let n = width_bits as usize / 64 + 1;
        assert!(n <= MAX_LIMBS, "width {width_bits} exceeds WideInt capacity");
        n
    }

    pub fn zero(len: usize) -> Self {
        assert!((1..=MAX_LIMBS).contains(&len));
        WideInt { limbs: [0; MAX_LIMBS], len: len as u8 }
    }

    pub fn from_u64(v: u64, len: usize) -> Self {
        let mut w = Self::zero(len);
        w.limbs[0] = v;
        w
    }

    pub fn from_i128(v: i128, len: usize) -> Self {
        let mut w = Self::zero(len);
        let fill = if v < 0 { u64::MAX } else { 0 };
        for (i, limb) in w.limbs[..len].iter_mut().enumerate() {
            *limb = match i {
                0 => v as u64,
                1 => (v >> 64) as u64,
                _ => fill,
            };
        }
        w
    }

    /// Number of 64-bit limbs.
    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u32 {
        64 * self.len as u32
    }

    pub fn limbs(&self) -> &[u64] {
        &self.limbs[..self.len()]
    }

    pub fn is_zero(&self) -> bool {
        self.limbs().iter().all(|&l| l == 0)
    }

    pub fn is_negative(&self) -> bool {
        self.limbs[self.len() - 1] >> 63 == 1
    }

    pub fn bit(&self, i: u32) -> bool {
        if i >= self.bits() {
            return self.is_negative();
        }
        (self.limbs[(i / 64) as usize] >> (i % 64)) & 1 == 1
    }

    /// Copy with limb `i` replaced.
    pub fn with_limb(mut self, i: usize, v: u64) -> Self {
        assert!(i < self.len());
        self.limbs[i] = v;
        self
    }

    pub fn set_bit(&mut self, i: u32) {
        assert!(i < self.bits());
        self.limbs[(i / 64) as usize] |= 1 << (i % 64);
    }

    pub fn not(&self) -> Self {
        let mut out = *self;
        for l in out.limbs[..self.len()].iter_mut() {
            *l = !*l;
        }
        out
    }

    fn zip(&self, rhs: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        debug_assert_eq!(self.len, rhs.len);
        let mut out = *self;
        for i in 0..self.len() {
            out.limbs[i] = f(self.limbs[i], rhs.limbs[i]);
        }
        out
    }

    pub fn xor(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a ^ b)
    }

    pub fn and(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a & b)
    }

    pub fn or(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a | b)
    }

    /// Sum and carry-out of `self + rhs + carry_in`, wrapping.
    pub fn add_with_carry(&self, rhs: &Self, carry_in: bool) -> (Self, bool) {
        debug_assert_eq!(self.len, rhs.len);
        let mut out = *self;
        let mut carry = carry_in as u64;
        for i in 0..self.len() {
            let (s1, c1) = self.limbs[i].overflowing_add(rhs.limbs[i]);
            let (s2, c2) = s1.overflowing_add(carry);
            out.limbs[i] = s2;
            carry = (c1 | c2) as u64;
        }
        (out, carry == 1)
    }

    pub fn wrapping_add(&self, rhs: &Self) -> Self {
        self.add_with_carry(rhs, false).0
    }

    pub fn wrapping_neg(&self) -> Self {
        let one = Self::from_u64(1, self.len());
        self.not().wrapping_add(&one)
    }

    pub fn wrapping_sub(&self, rhs: &Self) -> Self {
        self.add_with_carry(&rhs.not(), true).0
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            self.wrapping_neg()
        } else {
            *self
        }
    }

    /// Logical left shift; bits shifted past the container are lost.
    pub fn shl(&self, n: u32) -> Self {
        let mut out = Self::zero(self.len());
        if n >= self.bits() {
            return out;
        }
        let limb_shift = (n / 64) as usize;
        let bit_shift = n % 64;
        for i in (limb_shift..self.len()).rev() {
            let src = i - limb_shift;
            let mut v = self.limbs[src] << bit_shift;
            if bit_shift > 0 && src > 0 {
                v |= self.limbs[src - 1] >> (64 - bit_shift);
            }
            out.limbs[i] = v;
        }
        out
    }

    /// Arithmetic right shift. Also reports whether any one-bits were
    /// shifted out.
    pub fn shr_sticky(&self, n: u32) -> (Self, bool) {
        let neg = self.is_negative();
        if n == 0 {
            return (*self, false);
        }
        if n >= self.bits() {
            let zero = Self::zero(self.len());
            let out = if neg { zero.not() } else { zero };
            return (out, !self.is_zero());
        }
        let sticky = self.any_below(n);
        let limb_shift = (n / 64) as usize;
        let bit_shift = n % 64;
        let fill = if neg { u64::MAX } else { 0 };
        let mut out = Self::zero(self.len());
        for i in 0..self.len() {
            let src = i + limb_shift;
            let lo = if src < self.len() { self.limbs[src] } else { fill };
            let hi = if src + 1 < self.len() { self.limbs[src + 1] } else { fill };
            out.limbs[i] = if bit_shift == 0 { lo } else { (lo >> bit_shift) | (hi << (64 - bit_shift)) };
        }
        (out, sticky)
    }

    /// True when any of the bits strictly below position `n` is set.
    pub fn any_below(&self, n: u32) -> bool {
        let n = n.min(self.bits());
        let full = (n / 64) as usize;
        if self.limbs[..full].iter().any(|&l| l != 0) {
            return true;
        }
        let rem = n % 64;
        rem > 0 && self.limbs[full] & ((1u64 << rem) - 1) != 0
    }

    /// Index of the highest set bit plus one (0 for zero). Meaningful for
    /// non-negative values.
    pub fn bit_len(&self) -> u32 {
        for i in (0..self.len()).rev() {
            if self.limbs[i] != 0 {
                return 64 * i as u32 + 64 - self.limbs[i].leading_zeros();
            }
        }
        0
    }

    /// The 64 bits starting at position `lo` (bits above the container read
    /// as the sign).
    pub fn window64(&self, lo: u32) -> u64 {
        let (shifted, _) = self.shr_sticky(lo);
        shifted.limbs[0]
    }

    /// Whether the value is representable as a signed `width`-bit integer.
    pub fn fits_signed(&self, width: u32) -> bool {
        if width >= self.bits() {
            return true;
        }
        let (high, _) = self.shr_sticky(width - 1);
        high.is_zero() || high.not().is_zero()
    }

    pub fn to_i128(&self) -> Option<i128> {
        if !self.fits_signed(128) {
            return None;
        }
        let lo = self.window64(0) as u128;
        let hi = self.window64(64) as u128;
        Some((hi << 64 | lo) as i128)
    }

    /// Largest signed `width`-bit value.
    pub fn signed_max(width: u32, len: usize) -> Self {
        let mut w = Self::zero(len);
        for i in 0..width - 1 {
            w.set_bit(i);
        }
        w
    }

    /// Smallest signed `width`-bit value.
    pub fn signed_min(width: u32, len: usize) -> Self {
        Self::signed_max(width, len).not()
    }

    pub fn signum(&self) -> Ordering {
        if self.is_negative() {
            Ordering::Less
        } else if self.is_zero() {
            Ordering::Equal
        } else {
            Ordering::Greater
        }
    }

    /// Nearest `f64` to `self * 2^scale`.
    pub fn to_f64_scaled(&self, scale: i32) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let neg = self.is_negative();
        let mag = self.abs();
        let bl = mag.bit_len();
        let (top, exp) = if bl > 64 {
            let lo = bl - 64;
            let mut t = mag.window64(lo);
            if mag.any_below(lo) {
                t |= 1;
            }
            (t, scale + lo as i32)
        } else {
            (mag.limbs[0], scale)
        };
        // `top` holds at most 64 significant bits with a sticky LSB, so the
        // u64 -> f64 conversion rounds correctly; the power-of-two scaling is
        // exact unless the result leaves the normal range.
        let v = top as f64 * pow2(exp);
        if neg {
            -v
        } else {
            v
        }
    }

    pub fn to_bigint(&self) -> BigInt {
        let mag = self.abs();
        let mut digits = Vec::with_capacity(self.len() * 2);
        for &l in mag.limbs() {
            digits.push(l as u32);
            digits.push((l >> 32) as u32);
        }
        let u = BigUint::new(digits);
        if self.is_negative() {
            BigInt::from_biguint(Sign::Minus, u)
        } else {
            BigInt::from_biguint(Sign::Plus, u)
        }
    }

    /// Two's-complement image of `v`, or `None` if it does not fit.
    pub fn from_bigint(v: &BigInt, len: usize) -> Option<Self> {
        let (sign, digits) = v.to_u64_digits();
        if digits.len() > len {
            return None;
        }
        let mut w = Self::zero(len);
        w.limbs[..digits.len()].copy_from_slice(&digits);
        if w.is_negative() {
            return None;
        }
        if sign == Sign::Minus {
            w = w.wrapping_neg();
        }
        Some(w)
    }
}

/// Exact power of two as `f64`, saturating to 0 / infinity outside range.
pub(crate) fn pow2(e: i32) -> f64 {
    if e > 1023 {
        f64::INFINITY
    } else if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else if e >= -1074 {
        f64::from_bits(1u64 << (e + 1074))
    } else {
        // Split so intermediate stays representable; rounds like a product.
        pow2(e + 600) * pow2(-600)
    }
}

impl fmt::Debug for WideInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WideInt({})", self.to_bigint())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_sub_neg_roundtrip() {
        let a = WideInt::from_i128(-12345678901234567890123, 3);
        let b = WideInt::from_i128(98765432109876543210, 3);
        let s = a.wrapping_add(&b);
        assert_eq!(s.to_bigint(), BigInt::from(-12345678901234567890123i128 + 98765432109876543210i128));
        assert_eq!(s.wrapping_sub(&b), a);
        assert_eq!(a.wrapping_neg().wrapping_neg(), a);
    }

    #[test]
    fn shifts_and_sticky() {
        let v = WideInt::from_i128(0b1011 << 70, 3);
        let (r, st) = v.shr_sticky(71);
        assert_eq!(r.to_bigint(), BigInt::from(0b101));
        assert!(st);
        assert!(!v.shr_sticky(70).1);
        let (r, st) = WideInt::from_i128(-5, 2).shr_sticky(1);
        assert_eq!(r.to_bigint(), BigInt::from(-3));
        assert!(st);
        let (r, st) = WideInt::from_i128(-5, 2).shr_sticky(500);
        assert_eq!(r.to_bigint(), BigInt::from(-1));
        assert!(st);
        assert_eq!(WideInt::from_u64(3, 2).shl(100).shr_sticky(100).0, WideInt::from_u64(3, 2));
    }

    #[test]
    fn fits_and_saturation_bounds() {
        let max = WideInt::signed_max(10, 1);
        assert_eq!(max.to_bigint(), BigInt::from(511));
        assert_eq!(WideInt::signed_min(10, 1).to_bigint(), BigInt::from(-512));
        assert!(max.fits_signed(10));
        assert!(!WideInt::from_u64(512, 1).fits_signed(10));
        assert!(WideInt::from_i128(-512, 1).fits_signed(10));
    }

    #[test]
    fn f64_conversion() {
        assert_eq!(WideInt::from_i128(-3, 2).to_f64_scaled(-1), -1.5);
        let big = WideInt::from_u64(1, 3).shl(130);
        assert_eq!(big.to_f64_scaled(-130), 1.0);
        assert_eq!(WideInt::from_u64(u64::MAX, 2).to_f64_scaled(0), 18446744073709551616.0);
    }

    #[test]
    fn bigint_roundtrip() {
        let v = BigInt::from(-7) << 300;
        let w = WideInt::from_bigint(&v, 6).unwrap();
        assert_eq!(w.to_bigint(), v);
        assert!(WideInt::from_bigint(&(BigInt::from(1) << 200), 3).is_none());
    }
}
