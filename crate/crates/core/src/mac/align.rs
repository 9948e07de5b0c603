//! Stage II/III: lane products and their alignment into common-anchor addends.

use arrayvec::ArrayVec;

use super::{tile_multiply, PrecisionMode, BOOTH_UNITS};
use crate::formats::UnpackedOperand;
use crate::wide::WideInt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProductFlags {
    pub zero: bool,
    pub inf: bool,
    /// NaN / NaR operand, or `0 * inf`.
    pub invalid: bool,
}

/// Unnormalized product of one lane: `(-1)^negative * sig * 2^(scale - point)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaneProduct {
    pub negative: bool,
    pub sig: u64,
    pub scale: i32,
    pub point: u32,
    pub flags: ProductFlags,
}

impl LaneProduct {
    pub fn lsb_scale(&self) -> i32 {
        self.scale - self.point as i32
    }

    pub fn is_special(&self) -> bool {
        self.flags.inf || self.flags.invalid
    }
}

/// Multiplies two unpacked lanes on the Booth tile array.
pub fn lane_multiply(a: &UnpackedOperand, b: &UnpackedOperand, mode: &PrecisionMode) -> LaneProduct {
    let negative = a.negative ^ b.negative;
    let any_invalid = a.flags.is_nar_or_nan || b.flags.is_nar_or_nan;
    let any_inf = a.flags.is_inf || b.flags.is_inf;
    let any_zero = a.flags.is_zero || b.flags.is_zero;
    let flags = ProductFlags {
        invalid: any_invalid || (any_inf && any_zero),
        inf: any_inf && !any_invalid && !any_zero,
        zero: any_zero && !any_inf && !any_invalid,
    };
    let sig = if flags.zero || flags.inf || flags.invalid {
        0
    } else {
        tile_multiply(a.significand, b.significand, mode.tile_width())
    };
    LaneProduct { negative, sig, scale: a.scale + b.scale, point: a.point + b.point, flags }
}

/// Two's-complement addends sharing the exponent `anchor` of their LSB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedLanes {
    pub anchor: i32,
    pub addends: ArrayVec<WideInt, { BOOTH_UNITS as usize }>,
    /// Any lane lost one-bits below the anchor.
    pub sticky: bool,
}

fn align_one(p: &LaneProduct, anchor: i32, len: usize) -> (WideInt, bool) {
    let mag = WideInt::from_u64(p.sig, len);
    let v = if p.negative { mag.wrapping_neg() } else { mag };
    let shift = p.lsb_scale() - anchor;
    if shift >= 0 {
        (v.shl(shift as u32), false)
    } else {
        // Shift after complementing so the discarded bits floor toward -inf;
        // lost ones are ORed into the LSB.
        let (mut out, sticky) = v.shr_sticky((-shift) as u32);
        if sticky {
            out.set_bit(0);
        }
        (out, sticky)
    }
}

/// Aligns nonzero products to an explicit anchor (the accumulator LSB for
/// exact accumulation). Zero products are dropped.
pub fn align_to_anchor(products: &[LaneProduct], anchor: i32, len: usize) -> AlignedLanes {
    let mut addends = ArrayVec::new();
    let mut sticky = false;
    for p in products.iter().filter(|p| p.sig != 0) {
        let (v, s) = align_one(p, anchor, len);
        sticky |= s;
        addends.push(v);
    }
    AlignedLanes { anchor, addends, sticky }
}

/// Aligns products against the largest exponent among the nonzero lanes,
/// keeping `guard_bits` below the widest product's LSB.
///
/// All lanes of one mode share `point`, so the largest exponent also has the
/// highest LSB; smaller lanes are shifted right, losing bits into a sticky
/// LSB. Zero lanes do not take part in the exponent comparison.
pub fn exponent_max_align(products: &[LaneProduct], guard_bits: u32, len: usize) -> AlignedLanes {
    let max_lsb = products.iter().filter(|p| p.sig != 0).map(LaneProduct::lsb_scale).max();
    match max_lsb {
        None => AlignedLanes { anchor: 0, addends: ArrayVec::new(), sticky: false },
        Some(m) => align_to_anchor(products, m - guard_bits as i32, len),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::{unpack, EncodedScalar, FormatDescriptor};

    fn prod(a: u32, b: u32, f: FormatDescriptor) -> LaneProduct {
        let mode = PrecisionMode::new(f);
        lane_multiply(&unpack(EncodedScalar::wrap(a, f)), &unpack(EncodedScalar::wrap(b, f)), &mode)
    }

    #[test]
    fn bf16_product_is_exact() {
        let f = FormatDescriptor::bf16();
        // 1.5 * -2.5
        let p = prod(0x3FC0, 0xC020, f);
        assert!(p.negative);
        assert_eq!(p.sig as f64 * 2f64.powi(p.lsb_scale()), 3.75);
    }

    #[test]
    fn special_products() {
        let f = FormatDescriptor::fp16_e5m10();
        let inf = 0x7C00;
        let nan = 0x7E00;
        assert!(prod(inf, 0x3C00, f).flags.inf);
        assert!(prod(inf, 0, f).flags.invalid);
        assert!(prod(nan, 0x3C00, f).flags.invalid);
        assert!(prod(0, 0x3C00, f).flags.zero);
        let p8 = FormatDescriptor::posit8();
        assert!(prod(0x80, 0x40, p8).flags.invalid);
    }

    #[test]
    fn align_max_shifts_smaller_lanes_with_sticky() {
        let f = FormatDescriptor::fp8_e4m3();
        let big = prod(0x78, 0x38, f); // 256 * 1
        let small = prod(0x09, 0x38, f); // 2^-6 * 1.125 * 1
        let out = exponent_max_align(&[big, small], 3, 2);
        assert_eq!(out.addends.len(), 2);
        assert!(out.sticky);
        // The small lane collapses to the sticky LSB.
        assert_eq!(out.addends[1], WideInt::from_u64(1, 2));
        let exact = align_to_anchor(&[big, small], -20, 2);
        assert!(!exact.sticky);
    }

    #[test]
    fn negative_alignment_floors() {
        let f = FormatDescriptor::fp8_e4m3();
        let big = prod(0x78, 0x38, f);
        let small = prod(0x89, 0x38, f); // negative small lane
        let out = exponent_max_align(&[big, small], 3, 2);
        // floor(-tiny) = -1 with LSB forced to one.
        assert_eq!(out.addends[1], WideInt::from_i128(-1, 2));
    }

    #[test]
    fn zero_lanes_are_dropped() {
        let f = FormatDescriptor::fp8_e4m3();
        let z = prod(0, 0x38, f);
        let out = exponent_max_align(&[z, z], 3, 1);
        assert!(out.addends.is_empty());
    }
}
