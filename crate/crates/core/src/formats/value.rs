use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

/// An exact dyadic rational `(-1)^negative * mag * 2^exp`.
///
/// Zero keeps its sign so Float `-0` survives a decode/encode round trip.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactReal {
    negative: bool,
    mag: BigUint,
    exp: i32,
}

impl ExactReal {
    pub fn zero(negative: bool) -> Self {
        ExactReal { negative, mag: BigUint::zero(), exp: 0 }
    }

    pub fn new(negative: bool, mag: BigUint, exp: i32) -> Self {
        let mut r = ExactReal { negative, mag, exp };
        r.normalize();
        r
    }

    pub fn from_parts(negative: bool, mag: u64, exp: i32) -> Self {
        Self::new(negative, BigUint::from(mag), exp)
    }

    pub fn from_int(v: i64) -> Self {
        Self::from_parts(v < 0, v.unsigned_abs(), 0)
    }

    /// Exact image of a finite `f64`.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7FF) as i32;
        let frac = bits & ((1 << 52) - 1);
        let (mag, exp) = if biased == 0 { (frac, -1074) } else { (frac | (1 << 52), biased - 1075) };
        Some(Self::from_parts(negative, mag, exp))
    }

    fn normalize(&mut self) {
        if self.mag.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.mag.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mag >>= tz as usize;
            self.exp += tz as i32;
        }
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn is_zero(&self) -> bool {
        self.mag.is_zero()
    }

    pub fn magnitude(&self) -> &BigUint {
        &self.mag
    }

    /// Exponent of the magnitude's least significant bit (odd `mag`).
    pub fn exponent(&self) -> i32 {
        self.exp
    }

    /// Scale of the leading one-bit, i.e. `floor(log2 |x|)`.
    pub fn leading_scale(&self) -> Option<i32> {
        if self.is_zero() {
            None
        } else {
            Some(self.exp + self.mag.bits() as i32 - 1)
        }
    }

    pub fn neg(&self) -> Self {
        ExactReal { negative: !self.negative, ..self.clone() }
    }

    pub fn abs(&self) -> Self {
        ExactReal { negative: false, ..self.clone() }
    }

    /// Numeric comparison; `-0` and `+0` compare equal.
    pub fn cmp_value(&self, other: &Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return if other.negative { Ordering::Greater } else { Ordering::Less },
            (false, true) => return if self.negative { Ordering::Less } else { Ordering::Greater },
            _ => {}
        }
        if self.negative != other.negative {
            return if self.negative { Ordering::Less } else { Ordering::Greater };
        }
        let e = self.exp.min(other.exp);
        let a = &self.mag << (self.exp - e) as usize;
        let b = &other.mag << (other.exp - e) as usize;
        let mag_ord = a.cmp(&b);
        if self.negative {
            mag_ord.reverse()
        } else {
            mag_ord
        }
    }

    pub fn value_eq(&self, other: &Self) -> bool {
        self.cmp_value(other) == Ordering::Equal
    }

    /// Nearest `f64` (ties to even). Exact for every value of a 16-bit format.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return if self.negative { -0.0 } else { 0.0 };
        }
        let bits = self.mag.bits() as i32;
        let v = if bits <= 53 {
            self.mag.to_f64().unwrap() * crate::wide::pow2(self.exp)
        } else {
            // Keep 64 bits plus a sticky bit, then let the integer conversion round.
            let drop = (bits - 64).max(0) as usize;
            let mut top = (&self.mag >> drop).to_u64().unwrap();
            if drop > 0 && (&self.mag & ((BigUint::one() << drop) - 1u32)) != BigUint::zero() {
                top |= 1;
            }
            top as f64 * crate::wide::pow2(self.exp + drop as i32)
        };
        if self.negative {
            -v
        } else {
            v
        }
    }

    /// Exact decimal expansion (every dyadic rational has a finite one).
    pub fn to_decimal_string(&self) -> String {
        let sign = if self.negative && !self.is_zero() { "-" } else { "" };
        if self.exp >= 0 {
            return format!("{sign}{}", &self.mag << self.exp as usize);
        }
        let places = (-self.exp) as usize;
        let scaled = &self.mag * BigUint::from(5u32).pow(places as u32);
        let mut digits = scaled.to_string();
        if digits.len() <= places {
            digits = format!("{}{}", "0".repeat(places + 1 - digits.len()), digits);
        }
        let (int_part, frac_part) = digits.split_at(digits.len() - places);
        format!("{sign}{int_part}.{frac_part}")
    }
}

impl fmt::Debug for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}*2^{}", if self.negative { "-" } else { "+" }, self.mag, self.exp)
    }
}

impl fmt::Display for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

/// Result of decoding a bit pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Finite(ExactReal),
    Inf { negative: bool },
    NaN,
    /// Posit Not-a-Real.
    NaR,
}

impl Value {
    pub fn finite(&self) -> Option<&ExactReal> {
        match self {
            Value::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Value::Finite(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Finite(x) => x.to_f64(),
            Value::Inf { negative: false } => f64::INFINITY,
            Value::Inf { negative: true } => f64::NEG_INFINITY,
            Value::NaN | Value::NaR => f64::NAN,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Finite(x) => write!(f, "{x}"),
            Value::Inf { negative: false } => f.write_str("inf"),
            Value::Inf { negative: true } => f.write_str("-inf"),
            Value::NaN => f.write_str("nan"),
            Value::NaR => f.write_str("nar"),
        }
    }
}
