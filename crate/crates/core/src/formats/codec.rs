//! Pattern decoding (exact values) and operand unpacking (datapath fields).

use super::{EncodedScalar, ExactReal, FormatDescriptor, FormatKind, Value};

/// Exact value of a bit pattern. Total over all patterns.
pub fn decode(s: EncodedScalar) -> Value {
    let f = s.format();
    let bits = s.bits() as u32;
    match f.kind {
        FormatKind::Fxp => {
            let n = f.total_bits;
            let code = ((bits << (32 - n)) as i32) >> (32 - n);
            Value::Finite(ExactReal::from_parts(code < 0, code.unsigned_abs() as u64, -(f.frac_bits as i32)))
        }
        FormatKind::Float | FormatKind::Bfloat => decode_float(bits, &f),
        FormatKind::Posit => decode_posit(bits, &f),
    }
}

fn decode_float(bits: u32, f: &FormatDescriptor) -> Value {
    let negative = bits >> (f.total_bits - 1) == 1;
    let e = (bits >> f.mant_bits) & ((1 << f.exp_bits) - 1);
    let m = bits & ((1 << f.mant_bits) - 1);
    let e_all = (1 << f.exp_bits) - 1;
    if f.is_ofp8_e4m3() {
        if e == e_all && m == (1 << f.mant_bits) - 1 {
            return Value::NaN;
        }
    } else if e == e_all {
        return if m == 0 { Value::Inf { negative } } else { Value::NaN };
    }
    let (sig, exp) = if e == 0 {
        (m, f.emin() - f.mant_bits as i32)
    } else {
        (m | (1 << f.mant_bits), e as i32 - f.bias - f.mant_bits as i32)
    };
    if sig == 0 {
        return Value::Finite(ExactReal::zero(negative));
    }
    Value::Finite(ExactReal::from_parts(negative, sig as u64, exp))
}

fn decode_posit(bits: u32, f: &FormatDescriptor) -> Value {
    let n = f.total_bits;
    if bits == 0 {
        return Value::Finite(ExactReal::zero(false));
    }
    if bits == 1 << (n - 1) {
        return Value::NaR;
    }
    let negative = bits >> (n - 1) == 1;
    let body = if negative { bits.wrapping_neg() & f.mask() } else { bits };
    let (scale, frac, frac_len) = posit_fields(body, n, f.es);
    let sig = (1u64 << frac_len) | frac as u64;
    Value::Finite(ExactReal::from_parts(negative, sig, scale - frac_len as i32))
}

/// Splits a positive posit magnitude pattern into `(scale, fraction, fraction_len)`.
pub(super) fn posit_fields(body: u32, n: u32, es: u32) -> (i32, u32, u32) {
    debug_assert!(body != 0 && body >> (n - 1) == 0);
    // Walk the regime run from the bit below the sign.
    let first = (body >> (n - 2)) & 1;
    let mut run = 0u32;
    let mut pos = n as i32 - 2;
    while pos >= 0 && (body >> pos) & 1 == first {
        run += 1;
        pos -= 1;
    }
    let k = if first == 1 { run as i32 - 1 } else { -(run as i32) };
    // Skip the terminating bit, if present.
    pos -= 1;
    let remaining = (pos + 1).max(0) as u32;
    let exp_len = remaining.min(es);
    let exp_field = if exp_len == 0 { 0 } else { (body >> (remaining - exp_len)) & ((1 << exp_len) - 1) };
    let exp = exp_field << (es - exp_len);
    let frac_len = remaining - exp_len;
    let frac = body & ((1u32 << frac_len) - 1);
    ((k << es) + exp as i32, frac, frac_len)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OperandFlags {
    pub is_zero: bool,
    pub is_nar_or_nan: bool,
    pub is_inf: bool,
    pub is_subnormal: bool,
}

/// Stage-I view of an operand: sign, scale and a significand with the hidden
/// bit explicit.
///
/// For finite values `(-1)^negative * significand * 2^(scale - point)` is the
/// exact value. Float and posit significands are `sig_width` bits with the
/// binary point below the leading bit; fixed-point significands are the
/// magnitude of the integer code with `scale = -frac_bits` and `point = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnpackedOperand {
    pub negative: bool,
    pub scale: i32,
    pub significand: u32,
    pub point: u32,
    pub flags: OperandFlags,
}

impl UnpackedOperand {
    /// Exponent carried by the significand's least significant bit.
    pub fn lsb_scale(&self) -> i32 {
        self.scale - self.point as i32
    }

    pub fn is_special(&self) -> bool {
        self.flags.is_nar_or_nan || self.flags.is_inf
    }

    pub fn to_exact(&self) -> Option<ExactReal> {
        if self.is_special() {
            return None;
        }
        Some(ExactReal::from_parts(self.negative, self.significand as u64, self.lsb_scale()))
    }
}

/// Field decomposition of a pattern for the multiplier datapath.
pub fn unpack(s: EncodedScalar) -> UnpackedOperand {
    let f = s.format();
    let bits = s.bits() as u32;
    let n = f.total_bits;
    let point = f.sig_point();
    let special = |flags: OperandFlags, negative: bool| UnpackedOperand {
        negative,
        scale: 0,
        significand: 0,
        point,
        flags,
    };
    match f.kind {
        FormatKind::Fxp => {
            let code = ((bits << (32 - n)) as i32) >> (32 - n);
            UnpackedOperand {
                negative: code < 0,
                scale: -(f.frac_bits as i32),
                significand: code.unsigned_abs(),
                point: 0,
                flags: OperandFlags { is_zero: code == 0, ..Default::default() },
            }
        }
        FormatKind::Float | FormatKind::Bfloat => {
            let negative = bits >> (n - 1) == 1;
            let e = (bits >> f.mant_bits) & ((1 << f.exp_bits) - 1);
            let m = bits & ((1 << f.mant_bits) - 1);
            let e_all = (1 << f.exp_bits) - 1;
            let m_all = (1 << f.mant_bits) - 1;
            if e == e_all && (!f.is_ofp8_e4m3() || m == m_all) {
                let flags = if m == 0 && f.has_inf() {
                    OperandFlags { is_inf: true, ..Default::default() }
                } else {
                    OperandFlags { is_nar_or_nan: true, ..Default::default() }
                };
                return special(flags, negative);
            }
            if e == 0 {
                UnpackedOperand {
                    negative,
                    scale: f.emin(),
                    significand: m,
                    point,
                    flags: OperandFlags { is_zero: m == 0, is_subnormal: m != 0, ..Default::default() },
                }
            } else {
                UnpackedOperand {
                    negative,
                    scale: e as i32 - f.bias,
                    significand: m | (1 << f.mant_bits),
                    point,
                    flags: OperandFlags::default(),
                }
            }
        }
        FormatKind::Posit => {
            if bits == 0 {
                return special(OperandFlags { is_zero: true, ..Default::default() }, false);
            }
            if bits == 1 << (n - 1) {
                return special(OperandFlags { is_nar_or_nan: true, ..Default::default() }, false);
            }
            let negative = bits >> (n - 1) == 1;
            let body = if negative { bits.wrapping_neg() & f.mask() } else { bits };
            // Regime length via leading-zero count on the body shifted to the top.
            let aligned = body << (32 - n + 1);
            let first_one = aligned >> 31 == 1;
            let run = if first_one { (!aligned).leading_zeros() } else { aligned.leading_zeros() }.min(n - 1);
            let k = if first_one { run as i32 - 1 } else { -(run as i32) };
            let consumed = (run + 1).min(n - 1);
            let remaining = n - 1 - consumed;
            let exp_len = remaining.min(f.es);
            let exp_field = if exp_len == 0 { 0 } else { (body >> (remaining - exp_len)) & ((1 << exp_len) - 1) };
            let frac_len = remaining - exp_len;
            let frac = body & ((1u32 << frac_len) - 1);
            debug_assert!(frac_len <= point);
            UnpackedOperand {
                negative,
                scale: (k << f.es) + (exp_field << (f.es - exp_len)) as i32,
                significand: (1 << point) | (frac << (point - frac_len)),
                point,
                flags: OperandFlags::default(),
            }
        }
    }
}
