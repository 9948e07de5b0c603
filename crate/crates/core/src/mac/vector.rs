use super::{MacError, PrecisionMode};
use crate::formats::EncodedScalar;

/// 128-bit packed operand register. Lane `i` occupies bits
/// `[i * total_bits, (i + 1) * total_bits)`; lanes at or beyond
/// `valid_lanes` are zero padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VectorWord {
    payload: u128,
    mode: PrecisionMode,
    valid_lanes: u32,
}

impl VectorWord {
    /// Packs up to `mode.lanes` scalars; missing lanes are zero-padded.
    pub fn pack(values: &[EncodedScalar], mode: PrecisionMode) -> Result<Self, MacError> {
        assert!(values.len() as u32 <= mode.lanes, "too many lanes for {mode}");
        let width = mode.format.total_bits;
        let mut payload = 0u128;
        for (i, v) in values.iter().enumerate() {
            if v.format() != mode.format {
                return Err(MacError::ModeMismatch { expected: mode.format.name(), got: v.format().name() });
            }
            payload |= (v.bits() as u128) << (i as u32 * width);
        }
        Ok(VectorWord { payload, mode, valid_lanes: values.len() as u32 })
    }

    /// A full register from a raw payload. Bits above the lanes must be zero.
    pub fn from_payload(payload: u128, mode: PrecisionMode) -> Option<Self> {
        let used = mode.lanes * mode.format.total_bits;
        if used < 128 && payload >> used != 0 {
            return None;
        }
        Some(VectorWord { payload, mode, valid_lanes: mode.lanes })
    }

    pub fn payload(&self) -> u128 {
        self.payload
    }

    pub fn mode(&self) -> PrecisionMode {
        self.mode
    }

    pub fn valid_lanes(&self) -> u32 {
        self.valid_lanes
    }

    pub fn lane(&self, i: u32) -> EncodedScalar {
        let width = self.mode.format.total_bits;
        let bits = (self.payload >> (i * width)) as u32;
        EncodedScalar::wrap(bits, self.mode.format)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::FormatDescriptor;

    #[test]
    fn fxp4_uses_low_64_bits() {
        let f = FormatDescriptor::fxp(4, 2).unwrap();
        let mode = PrecisionMode::new(f);
        let vals: Vec<_> = (0..16).map(|i| EncodedScalar::wrap(i, f)).collect();
        let w = VectorWord::pack(&vals, mode).unwrap();
        assert_eq!(w.payload() >> 64, 0);
        assert_eq!(w.payload(), 0xFEDC_BA98_7654_3210);
        assert_eq!(w.lane(10).bits(), 10);
        assert!(VectorWord::from_payload(1 << 64, mode).is_none());
    }

    #[test]
    fn format_mismatch() {
        let mode = PrecisionMode::new(FormatDescriptor::bf16());
        let x = EncodedScalar::wrap(0x38, FormatDescriptor::fp8_e4m3());
        assert!(VectorWord::pack(&[x], mode).is_err());
    }
}
