//! Five-stage SIMD multiply-accumulate pipeline.
//!
//! Stage I unpacks lanes, stage II multiplies significands on an array of
//! sixteen 4-bit Booth units, stage III aligns products against the largest
//! exponent and compresses them (4:2 carry-save layers plus a carry-select
//! adder), stage IV accumulates into a wide register, and stage V normalizes
//! and rounds toward +inf (see [`crate::formats::pack_normalize_round`]).
//!
//! The functional model is exact; the cycle model is a separate counter
//! ([`PipelineStats`]) with one vector operation issued per cycle after a
//! four-cycle fill.

mod accumulator;
mod align;
mod booth;
mod csa;
mod dot;
mod pipeline;
mod vector;
mod vectors_csv;

pub use accumulator::{exact_width_bits, Poison, WideAccumulator};
pub use align::{align_to_anchor, exponent_max_align, lane_multiply, AlignedLanes, LaneProduct, ProductFlags};
pub use booth::{booth_multiply_4x4, booth_nibble_product, tile_multiply};
pub use csa::{csa_reduce, csa_reduce_traced, CsaTrace};
pub use dot::{
    dot_product, dot_product_acc, dot_product_traced, dot_products_batch, finalize, simd_mac_step, DotOutcome,
    StepReport,
};
pub use pipeline::{pipeline_trace, run_pipeline, ModeShare, PipelineRun, PipelineStats, VectorOpDesc, PIPELINE_FILL};
pub use vector::VectorWord;
pub use vectors_csv::{format_vector_csv, parse_vector_csv, VectorCase};

use crate::formats::FormatDescriptor;
use std::fmt;

/// Number of 4-bit Booth units in the multiplier array.
pub const BOOTH_UNITS: u32 = 16;

/// Guard bits kept below the anchor when aligning to the maximum exponent.
pub const ALIGN_GUARD_BITS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MacError {
    #[error("mode mismatch: expected {expected}, got {got}")]
    ModeMismatch { expected: String, got: String },
    #[error("operand vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("accumulation mode {0:?} is not available for {1}")]
    Accumulation(Accumulation, String),
    #[error("vector file line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

/// Lane allocation for one format.
///
/// A lane needs `ceil(sig_width / 4)^2` Booth units, and the array holds
/// sixteen, which yields 16 / 4 / 1 lanes for 4- / 8- / 16-bit significands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrecisionMode {
    pub format: FormatDescriptor,
    pub lanes: u32,
    pub tiles_per_lane: u32,
}

impl PrecisionMode {
    pub fn new(format: FormatDescriptor) -> Self {
        let digits = format.sig_width().div_ceil(4);
        let tiles_per_lane = digits * digits;
        PrecisionMode { format, lanes: BOOTH_UNITS / tiles_per_lane, tiles_per_lane }
    }

    /// Operand width fed to [`tile_multiply`].
    pub fn tile_width(&self) -> u32 {
        4 * self.format.sig_width().div_ceil(4)
    }
}

impl fmt::Display for PrecisionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.format, self.lanes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Accumulation {
    /// Quire / Kulisch register: every product is added exactly and the
    /// result is rounded once.
    #[default]
    ExactWide,
    /// Products are aligned to the running maximum exponent in a narrow
    /// window; shifted-out bits collapse into a sticky LSB.
    AlignToMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MacConfig {
    pub mode: PrecisionMode,
    pub accumulation: Accumulation,
    pub zero_skip: bool,
    pub output_format: FormatDescriptor,
    /// Extra cycles charged when consecutive vector ops change mode.
    pub mode_switch_penalty: u64,
}

impl MacConfig {
    /// Exact accumulation, zero-skip on, output in the operand format.
    pub fn new(format: FormatDescriptor) -> Self {
        MacConfig {
            mode: PrecisionMode::new(format),
            accumulation: Accumulation::ExactWide,
            zero_skip: true,
            output_format: format,
            mode_switch_penalty: 0,
        }
    }

    pub fn with_accumulation(mut self, accumulation: Accumulation) -> Self {
        self.accumulation = accumulation;
        self
    }

    pub fn with_zero_skip(mut self, zero_skip: bool) -> Self {
        self.zero_skip = zero_skip;
        self
    }

    pub fn with_output(mut self, output_format: FormatDescriptor) -> Self {
        self.output_format = output_format;
        self
    }

    pub fn validate(&self) -> Result<(), MacError> {
        if self.accumulation == Accumulation::AlignToMax && self.mode.format.is_fxp() {
            return Err(MacError::Accumulation(self.accumulation, self.mode.format.name()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lane_table() {
        let expect = [
            ("fxp4:f2", 16),
            ("fp8e4m3", 16),
            ("fp8e5m2", 16),
            ("fxp8:f6", 4),
            ("posit8", 4),
            ("bf16", 4),
            ("fxp16:f14", 1),
            ("fp16e5m10", 1),
            ("fp16e6m9", 1),
            ("posit16", 1),
        ];
        for (name, lanes) in expect {
            let mode = PrecisionMode::new(name.parse().unwrap());
            assert_eq!(mode.lanes, lanes, "{name}");
            assert_eq!(mode.lanes, 16 / mode.tiles_per_lane);
        }
        // The allocation does not depend on posit es.
        for es in 0..=3 {
            assert_eq!(PrecisionMode::new(FormatDescriptor::posit(8, es).unwrap()).lanes, 4);
            assert_eq!(PrecisionMode::new(FormatDescriptor::posit(16, es).unwrap()).lanes, 1);
        }
    }

    #[test]
    fn align_to_max_rejected_for_fxp() {
        let cfg = MacConfig::new("fxp8:f4".parse().unwrap()).with_accumulation(Accumulation::AlignToMax);
        assert!(cfg.validate().is_err());
        assert!(MacConfig::new(FormatDescriptor::bf16()).with_accumulation(Accumulation::AlignToMax).validate().is_ok());
    }
}
