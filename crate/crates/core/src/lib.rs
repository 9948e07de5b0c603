//! Bit-exact emulation of a trans-precision SIMD multiply-accumulate engine,
//! a layer-adaptive quantization framework, and a small accelerator
//! simulator built on top of both.

// `!(a < b)` is used on purpose where NaN must be rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod formats;
pub mod mac;
pub mod oracle;
pub mod quant;
pub mod wide;

pub use formats::{EncodedScalar, ExactReal, FormatDescriptor, FormatKind, RoundingMode, Value};
pub use mac::{Accumulation, MacConfig, MacError, PrecisionMode};
pub use wide::WideInt;
