//! Stage IV: the wide accumulation register.

use num_bigint::BigInt;

use super::{Accumulation, LaneProduct, PrecisionMode, ALIGN_GUARD_BITS};
use crate::formats::{ExactReal, FormatDescriptor, FormatKind};
use crate::wide::WideInt;

/// Headroom of the align-to-max window above two product widths.
const ALIGN_WINDOW_EXTRA: u32 = 48;

/// Special-value state absorbed from products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Poison {
    #[default]
    None,
    PosInf,
    NegInf,
    Invalid,
}

impl Poison {
    pub fn absorb(self, p: &LaneProduct) -> Poison {
        if p.flags.invalid {
            return Poison::Invalid;
        }
        if !p.flags.inf {
            return self;
        }
        let inf = if p.negative { Poison::NegInf } else { Poison::PosInf };
        match self {
            Poison::None => inf,
            s if s == inf => s,
            // inf - inf
            _ => Poison::Invalid,
        }
    }
}

/// Accumulator register: the running sum is `value * 2^unit_scale`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WideAccumulator {
    pub value: WideInt,
    pub width_bits: u32,
    pub unit_scale: i32,
    /// Exact accumulation saturated at least once.
    pub overflowed: bool,
    /// Align-to-max accumulation discarded one-bits.
    pub inexact: bool,
    pub poison: Poison,
    pub format: FormatDescriptor,
    pub accumulation: Accumulation,
}

/// Width of the exact (quire / Kulisch) register for a format.
///
/// The register LSB sits at twice the smallest operand LSB and the top must
/// hold the largest product with carry headroom for at least 2^15 additions:
/// posits use `2 * (max_scale - min_lsb) + 19` rounded up to 64 bits (128 /
/// 256 for posit8 / posit16 with es = 2), IEEE-like floats use
/// `2 * (emax - emin) + 2 * sig_width + 32`, fixed-point `2n + 32`.
pub fn exact_width_bits(f: &FormatDescriptor) -> u32 {
    match f.kind {
        FormatKind::Fxp => 2 * f.total_bits + 32,
        FormatKind::Float | FormatKind::Bfloat => (2 * (f.emax() - f.emin())) as u32 + 2 * f.sig_width() + 32,
        FormatKind::Posit => {
            let raw = (2 * (f.max_scale() - f.min_lsb_scale())) as u32 + 19;
            raw.div_ceil(64) * 64
        }
    }
}

impl WideAccumulator {
    pub fn new(mode: &PrecisionMode, accumulation: Accumulation) -> Self {
        let f = mode.format;
        let (width_bits, unit_scale) = match accumulation {
            Accumulation::ExactWide => (exact_width_bits(&f), 2 * f.min_lsb_scale()),
            Accumulation::AlignToMax => {
                (2 * f.sig_width() + ALIGN_GUARD_BITS + ALIGN_WINDOW_EXTRA, 2 * f.min_lsb_scale())
            }
        };
        WideAccumulator {
            value: WideInt::zero(WideInt::limbs_for_width(width_bits)),
            width_bits,
            unit_scale,
            overflowed: false,
            inexact: false,
            poison: Poison::None,
            format: f,
            accumulation,
        }
    }

    pub fn limbs(&self) -> usize {
        self.value.len()
    }

    pub fn absorb(&mut self, p: &LaneProduct) {
        self.poison = self.poison.absorb(p);
    }

    /// Adds a compressed step sum whose LSB has exponent `anchor`.
    pub fn add_aligned(&mut self, sum: WideInt, anchor: i32, sticky: bool) {
        match self.accumulation {
            Accumulation::ExactWide => {
                debug_assert_eq!(anchor, self.unit_scale);
                debug_assert!(!sticky);
                self.value = self.value.wrapping_add(&sum);
                if !self.value.fits_signed(self.width_bits) {
                    self.overflowed = true;
                    let len = self.limbs();
                    self.value = if self.value.is_negative() {
                        WideInt::signed_min(self.width_bits, len)
                    } else {
                        WideInt::signed_max(self.width_bits, len)
                    };
                }
            }
            Accumulation::AlignToMax => {
                self.inexact |= sticky;
                let mut sum = sum;
                if self.value.is_zero() {
                    self.unit_scale = anchor;
                } else if anchor > self.unit_scale {
                    self.value = self.shift_sticky(self.value, (anchor - self.unit_scale) as u32);
                    self.unit_scale = anchor;
                } else if anchor < self.unit_scale {
                    sum = self.shift_sticky(sum, (self.unit_scale - anchor) as u32);
                }
                self.value = self.value.wrapping_add(&sum);
                // Renormalize when the window fills up.
                let excess = (self.value.abs().bit_len() + 1).saturating_sub(self.width_bits);
                if excess > 0 {
                    self.value = self.shift_sticky(self.value, excess);
                    self.unit_scale += excess as i32;
                }
            }
        }
    }

    fn shift_sticky(&mut self, v: WideInt, n: u32) -> WideInt {
        let (mut out, st) = v.shr_sticky(n);
        if st {
            out.set_bit(0);
            self.inexact = true;
        }
        out
    }

    /// The register contents as an exact value (ignores poison).
    pub fn to_exact(&self) -> ExactReal {
        let b: BigInt = self.value.to_bigint();
        let negative = b.sign() == num_bigint::Sign::Minus;
        ExactReal::new(negative, b.magnitude().clone(), self.unit_scale)
    }

    pub fn to_f64(&self) -> f64 {
        match self.poison {
            Poison::None => self.value.to_f64_scaled(self.unit_scale),
            Poison::PosInf => f64::INFINITY,
            Poison::NegInf => f64::NEG_INFINITY,
            Poison::Invalid => f64::NAN,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_widths() {
        let w = |s: &str| exact_width_bits(&s.parse().unwrap());
        assert_eq!(w("posit8"), 128);
        assert_eq!(w("posit16"), 256);
        assert_eq!(w("fxp8:f4"), 48);
        assert_eq!(w("fp8e4m3"), 2 * (8 + 6) + 8 + 32);
        assert_eq!(w("bf16"), 2 * 253 + 16 + 32);
        for f in FormatDescriptor::all_standard() {
            assert!(WideInt::limbs_for_width(exact_width_bits(&f)) <= crate::wide::MAX_LIMBS);
        }
    }

    #[test]
    fn exact_saturates_with_flag() {
        let f: FormatDescriptor = "fxp4:f2".parse().unwrap();
        let mut acc = WideAccumulator::new(&PrecisionMode::new(f), Accumulation::ExactWide);
        let big = WideInt::signed_max(acc.width_bits, acc.limbs());
        acc.add_aligned(big, acc.unit_scale, false);
        assert!(!acc.overflowed);
        acc.add_aligned(WideInt::from_u64(1, acc.limbs()), acc.unit_scale, false);
        assert!(acc.overflowed);
        assert_eq!(acc.value, big);
    }

    #[test]
    fn align_to_max_reanchors() {
        let f = FormatDescriptor::bf16();
        let mut acc = WideAccumulator::new(&PrecisionMode::new(f), Accumulation::AlignToMax);
        let len = acc.limbs();
        acc.add_aligned(WideInt::from_u64(3, len), -10, false);
        assert_eq!(acc.unit_scale, -10);
        acc.add_aligned(WideInt::from_u64(1, len), 0, false);
        assert_eq!(acc.unit_scale, 0);
        assert!(acc.inexact);
        // 3 * 2^-10 collapsed into the sticky LSB.
        assert_eq!(acc.value, WideInt::from_u64(2, len));
    }

    #[test]
    fn poison_rules() {
        use super::super::ProductFlags;
        let inf = |negative| LaneProduct {
            negative,
            sig: 0,
            scale: 0,
            point: 0,
            flags: ProductFlags { inf: true, ..Default::default() },
        };
        assert_eq!(Poison::None.absorb(&inf(false)), Poison::PosInf);
        assert_eq!(Poison::PosInf.absorb(&inf(false)), Poison::PosInf);
        assert_eq!(Poison::PosInf.absorb(&inf(true)), Poison::Invalid);
    }
}
