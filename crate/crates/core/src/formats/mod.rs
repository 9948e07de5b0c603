//! Numeric formats of the trans-precision datapath.
//!
//! Every format is at most 16 bits wide and binary-scaled, so each finite
//! pattern has an exact [`ExactReal`] image. [`decode`] and [`encode`] convert
//! between bit patterns and exact values; [`unpack`] produces the
//! sign / scale / significand split consumed by the multiplier array, and
//! [`pack_normalize_round`] is the output stage that turns an accumulator
//! back into a pattern.

mod codec;
mod round;
mod table;
mod value;

pub use codec::{decode, unpack, OperandFlags, UnpackedOperand};
pub use round::{encode, encode_f64, encode_value, pack_normalize_round, Packed, RoundStatus};
pub use table::{conformance_csv, flags_label};
pub use value::{ExactReal, Value};

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("unknown format `{name}`; expected one of: {}", CANONICAL_NAMES.join(", "), name = .0)]
    UnknownName(String),
    #[error("fixed-point width {total} needs frac_bits in [0, {}], got {frac}", total - 1)]
    FracBits { total: u32, frac: u32 },
    #[error("posit es must be in [0, 3], got {0}")]
    PositEs(u32),
    #[error("unsupported width {0} for {1}")]
    Width(u32, &'static str),
    #[error("bit pattern {bits:#x} does not fit in {width} bits")]
    PatternWidth { bits: u32, width: u32 },
}

/// Canonical format names accepted on the command line and in plans.
pub const CANONICAL_NAMES: &[&str] = &[
    "fxp4:f<k>", "fxp8:f<k>", "fxp16:f<k>", "fp8e4m3", "fp8e5m2", "fp16e5m10", "fp16e6m9", "bf16",
    "posit8", "posit16",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FormatKind {
    Fxp,
    Float,
    Bfloat,
    Posit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RoundingMode {
    #[default]
    NearestEven,
    TowardPositive,
}

/// Static description of one numeric format.
///
/// Only the fields relevant to `kind` are meaningful; the others are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FormatDescriptor {
    pub kind: FormatKind,
    pub total_bits: u32,
    pub exp_bits: u32,
    pub mant_bits: u32,
    pub es: u32,
    pub frac_bits: u32,
    pub bias: i32,
}

impl FormatDescriptor {
    pub fn fxp(total_bits: u32, frac_bits: u32) -> Result<Self, FormatError> {
        if !matches!(total_bits, 4 | 8 | 16) {
            return Err(FormatError::Width(total_bits, "fixed-point"));
        }
        if frac_bits >= total_bits {
            return Err(FormatError::FracBits { total: total_bits, frac: frac_bits });
        }
        Ok(FormatDescriptor {
            kind: FormatKind::Fxp,
            total_bits,
            exp_bits: 0,
            mant_bits: 0,
            es: 0,
            frac_bits,
            bias: 0,
        })
    }

    /// Fixed-point with the default split of `total_bits - 2` fraction bits.
    pub fn fxp_default(total_bits: u32) -> Result<Self, FormatError> {
        Self::fxp(total_bits, total_bits.saturating_sub(2))
    }

    const fn float(kind: FormatKind, exp_bits: u32, mant_bits: u32) -> Self {
        FormatDescriptor {
            kind,
            total_bits: 1 + exp_bits + mant_bits,
            exp_bits,
            mant_bits,
            es: 0,
            frac_bits: 0,
            bias: (1 << (exp_bits - 1)) - 1,
        }
    }

    pub const fn fp8_e4m3() -> Self {
        Self::float(FormatKind::Float, 4, 3)
    }

    pub const fn fp8_e5m2() -> Self {
        Self::float(FormatKind::Float, 5, 2)
    }

    pub const fn fp16_e5m10() -> Self {
        Self::float(FormatKind::Float, 5, 10)
    }

    pub const fn fp16_e6m9() -> Self {
        Self::float(FormatKind::Float, 6, 9)
    }

    pub const fn bf16() -> Self {
        Self::float(FormatKind::Bfloat, 8, 7)
    }

    pub fn posit(total_bits: u32, es: u32) -> Result<Self, FormatError> {
        if !matches!(total_bits, 8 | 16) {
            return Err(FormatError::Width(total_bits, "posit"));
        }
        if es > 3 {
            return Err(FormatError::PositEs(es));
        }
        Ok(FormatDescriptor {
            kind: FormatKind::Posit,
            total_bits,
            exp_bits: 0,
            mant_bits: 0,
            es,
            frac_bits: 0,
            bias: 0,
        })
    }

    pub fn posit8() -> Self {
        Self::posit(8, 2).unwrap()
    }

    pub fn posit16() -> Self {
        Self::posit(16, 2).unwrap()
    }

    /// One instance of every supported format (fixed-point at its default split).
    pub fn all_standard() -> Vec<Self> {
        vec![
            Self::fxp_default(4).unwrap(),
            Self::fxp_default(8).unwrap(),
            Self::fxp_default(16).unwrap(),
            Self::fp8_e4m3(),
            Self::fp8_e5m2(),
            Self::fp16_e5m10(),
            Self::fp16_e6m9(),
            Self::bf16(),
            Self::posit8(),
            Self::posit16(),
        ]
    }

    pub fn mask(&self) -> u32 {
        (1u32 << self.total_bits) - 1
    }

    pub fn is_fxp(&self) -> bool {
        self.kind == FormatKind::Fxp
    }

    pub fn is_posit(&self) -> bool {
        self.kind == FormatKind::Posit
    }

    /// Float and Bfloat share the sign / exponent / mantissa layout.
    pub fn is_float(&self) -> bool {
        matches!(self.kind, FormatKind::Float | FormatKind::Bfloat)
    }

    /// E4M3 follows the OFP8 convention: no infinities, and the
    /// all-ones exponent with all-ones mantissa is the only NaN.
    pub fn is_ofp8_e4m3(&self) -> bool {
        self.is_float() && self.exp_bits == 4 && self.mant_bits == 3
    }

    pub fn has_inf(&self) -> bool {
        self.is_float() && !self.is_ofp8_e4m3()
    }

    pub fn has_signed_zero(&self) -> bool {
        self.is_float()
    }

    /// Minimum normal exponent of a Float format.
    pub fn emin(&self) -> i32 {
        1 - self.bias
    }

    /// Maximum finite exponent of a Float format.
    pub fn emax(&self) -> i32 {
        let top = (1i32 << self.exp_bits) - 1;
        if self.is_ofp8_e4m3() {
            top - self.bias
        } else {
            top - 1 - self.bias
        }
    }

    /// Scale of the posit maxpos (`useed^(n-2)`).
    pub fn posit_max_scale(&self) -> i32 {
        (self.total_bits as i32 - 2) << self.es
    }

    /// Significand width in the multiplier datapath, hidden bit included.
    ///
    /// Posits use a fixed-width significand sized so every es >= 1 pattern
    /// fits (`n - 3` bits); es = 0 needs one more bit.
    pub fn sig_width(&self) -> u32 {
        match self.kind {
            FormatKind::Fxp => self.total_bits,
            FormatKind::Float | FormatKind::Bfloat => self.mant_bits + 1,
            FormatKind::Posit => self.total_bits - 2 - self.es.min(1),
        }
    }

    /// Number of fraction bits in the unpacked significand (position of the
    /// binary point).
    pub fn sig_point(&self) -> u32 {
        match self.kind {
            FormatKind::Fxp => 0,
            _ => self.sig_width() - 1,
        }
    }

    /// Scale of the largest finite magnitude's leading bit.
    pub fn max_scale(&self) -> i32 {
        match self.kind {
            FormatKind::Fxp => self.total_bits as i32 - 1 - self.frac_bits as i32,
            FormatKind::Float | FormatKind::Bfloat => self.emax(),
            FormatKind::Posit => self.posit_max_scale(),
        }
    }

    /// Scale of the least significant one-bit over all finite values.
    pub fn min_lsb_scale(&self) -> i32 {
        match self.kind {
            FormatKind::Fxp => -(self.frac_bits as i32),
            FormatKind::Float | FormatKind::Bfloat => self.emin() - self.mant_bits as i32,
            FormatKind::Posit => -self.posit_max_scale(),
        }
    }

    /// Canonical NaN (or NaR) pattern; fixed-point has none and yields zero.
    pub fn nan_bits(&self) -> u16 {
        match self.kind {
            FormatKind::Fxp => 0,
            FormatKind::Posit => 1 << (self.total_bits - 1),
            _ if self.is_ofp8_e4m3() => 0x7F,
            _ => {
                let exp_all = ((1u32 << self.exp_bits) - 1) << self.mant_bits;
                (exp_all | (1 << (self.mant_bits - 1))) as u16
            }
        }
    }

    /// Pattern of the signed infinity, falling back to NaN / NaR for formats
    /// without infinities and to the saturated extreme for fixed-point.
    pub fn inf_bits(&self, negative: bool) -> u16 {
        match self.kind {
            FormatKind::Fxp => self.max_finite_bits(negative),
            FormatKind::Posit => self.nan_bits(),
            _ if !self.has_inf() => self.nan_bits(),
            _ => {
                let exp_all = ((1u32 << self.exp_bits) - 1) << self.mant_bits;
                (exp_all | ((negative as u32) << (self.total_bits - 1))) as u16
            }
        }
    }

    /// Pattern of the largest-magnitude finite value with the given sign.
    pub fn max_finite_bits(&self, negative: bool) -> u16 {
        let n = self.total_bits;
        match self.kind {
            FormatKind::Fxp => {
                if negative {
                    1 << (n - 1)
                } else {
                    ((1u32 << (n - 1)) - 1) as u16
                }
            }
            FormatKind::Posit => {
                let maxpos = (1u32 << (n - 1)) - 1;
                if negative {
                    ((1u32 << n) - maxpos) as u16
                } else {
                    maxpos as u16
                }
            }
            _ => {
                let mag = if self.is_ofp8_e4m3() {
                    0x7E
                } else {
                    let biased = (self.emax() + self.bias) as u32;
                    (biased << self.mant_bits) | ((1 << self.mant_bits) - 1)
                };
                (mag | ((negative as u32) << (n - 1))) as u16
            }
        }
    }

    pub fn zero_bits(&self, negative: bool) -> u16 {
        if negative && self.has_signed_zero() {
            1 << (self.total_bits - 1)
        } else {
            0
        }
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for FormatDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FormatKind::Fxp => write!(f, "fxp{}:f{}", self.total_bits, self.frac_bits),
            FormatKind::Bfloat => write!(f, "bf16"),
            FormatKind::Float => write!(f, "fp{}e{}m{}", self.total_bits, self.exp_bits, self.mant_bits),
            FormatKind::Posit if self.es == 2 => write!(f, "posit{}", self.total_bits),
            FormatKind::Posit => write!(f, "posit{}:es{}", self.total_bits, self.es),
        }
    }
}

impl FromStr for FormatDescriptor {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || FormatError::UnknownName(s.to_string());
        let lower = s.trim().to_ascii_lowercase();
        let (head, tail) = match lower.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (lower.as_str(), None),
        };
        let parse_suffix = |prefix: &str| -> Result<Option<u32>, FormatError> {
            match tail {
                None => Ok(None),
                Some(t) => t.strip_prefix(prefix).and_then(|v| v.parse().ok()).map(Some).ok_or_else(unknown),
            }
        };
        match head {
            "fxp4" | "fxp8" | "fxp16" => {
                let total: u32 = head[3..].parse().map_err(|_| unknown())?;
                match parse_suffix("f")? {
                    Some(k) => Self::fxp(total, k),
                    None => Self::fxp_default(total),
                }
            }
            "posit8" | "posit16" => {
                let total: u32 = head[5..].parse().map_err(|_| unknown())?;
                Self::posit(total, parse_suffix("es")?.unwrap_or(2))
            }
            _ if tail.is_some() => Err(unknown()),
            "fp8e4m3" => Ok(Self::fp8_e4m3()),
            "fp8e5m2" => Ok(Self::fp8_e5m2()),
            "fp16e5m10" => Ok(Self::fp16_e5m10()),
            "fp16e6m9" => Ok(Self::fp16_e6m9()),
            "bf16" => Ok(Self::bf16()),
            _ => Err(unknown()),
        }
    }
}

/// A bit pattern tagged with its format. Only the low `total_bits` may be set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EncodedScalar {
    bits: u16,
    format: FormatDescriptor,
}

impl EncodedScalar {
    pub fn new(bits: u32, format: FormatDescriptor) -> Result<Self, FormatError> {
        if bits & !format.mask() != 0 {
            return Err(FormatError::PatternWidth { bits, width: format.total_bits });
        }
        Ok(EncodedScalar { bits: bits as u16, format })
    }

    /// Masks `bits` to the format width.
    pub fn wrap(bits: u32, format: FormatDescriptor) -> Self {
        EncodedScalar { bits: (bits & format.mask()) as u16, format }
    }

    pub fn bits(&self) -> u16 {
        self.bits
    }

    pub fn format(&self) -> FormatDescriptor {
        self.format
    }

    pub fn hex(&self) -> String {
        let digits = (self.format.total_bits as usize).div_ceil(4);
        format!("0x{:0width$X}", self.bits, width = digits)
    }

    /// Iterator over every pattern of a format, in increasing bit order.
    pub fn all(format: FormatDescriptor) -> impl Iterator<Item = EncodedScalar> {
        (0..=format.mask()).map(move |b| EncodedScalar::wrap(b, format))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_layouts_are_consistent() {
        for f in FormatDescriptor::all_standard().into_iter().filter(|f| f.is_float()) {
            assert_eq!(1 + f.exp_bits + f.mant_bits, f.total_bits, "{f}");
        }
        assert_eq!(FormatDescriptor::fp16_e6m9().bias, 31);
        assert_eq!(FormatDescriptor::bf16().bias, 127);
        assert_eq!(FormatDescriptor::fp8_e4m3().emax(), 8);
        assert_eq!(FormatDescriptor::fp8_e5m2().emax(), 15);
    }

    #[test]
    fn names_roundtrip() {
        for f in FormatDescriptor::all_standard() {
            assert_eq!(f.name().parse::<FormatDescriptor>().unwrap(), f);
        }
        assert_eq!("fxp8:f4".parse::<FormatDescriptor>().unwrap(), FormatDescriptor::fxp(8, 4).unwrap());
        assert_eq!("posit8:es1".parse::<FormatDescriptor>().unwrap(), FormatDescriptor::posit(8, 1).unwrap());
        assert_eq!("FP8E4M3".parse::<FormatDescriptor>().unwrap(), FormatDescriptor::fp8_e4m3());
    }

    #[test]
    fn bad_names_are_rejected() {
        for bad in ["fp32", "fxp8:f8", "fxp12:f2", "posit8:es4", "bf16:x", "fxp8:q3", ""] {
            assert!(bad.parse::<FormatDescriptor>().is_err(), "{bad}");
        }
        let msg = "int8".parse::<FormatDescriptor>().unwrap_err().to_string();
        assert!(msg.contains("fp8e4m3") && msg.contains("posit16"));
    }

    #[test]
    fn pattern_width_checked() {
        let f = FormatDescriptor::fp8_e4m3();
        assert!(EncodedScalar::new(0x100, f).is_err());
        assert_eq!(EncodedScalar::new(0x7E, f).unwrap().hex(), "0x7E");
        assert_eq!(EncodedScalar::new(0x3F80, FormatDescriptor::bf16()).unwrap().hex(), "0x3F80");
    }

    #[test]
    fn special_patterns() {
        assert_eq!(FormatDescriptor::fp8_e5m2().nan_bits(), 0x7E);
        assert_eq!(FormatDescriptor::fp8_e5m2().inf_bits(true), 0xFC);
        assert_eq!(FormatDescriptor::fp8_e4m3().max_finite_bits(false), 0x7E);
        assert_eq!(FormatDescriptor::posit8().max_finite_bits(true), 0x81);
        assert_eq!(FormatDescriptor::bf16().max_finite_bits(false), 0x7F7F);
        assert_eq!(FormatDescriptor::fxp(4, 2).unwrap().max_finite_bits(true), 0x8);
    }
}
