//! Vector steps and whole dot products through the pipeline.

use arrayvec::ArrayVec;
use rayon::prelude::*;

use super::{
    align_to_anchor, csa_reduce, exponent_max_align, lane_multiply, pipeline_trace, Accumulation, LaneProduct,
    MacConfig, MacError, PipelineStats, Poison, VectorOpDesc, VectorWord, WideAccumulator, ALIGN_GUARD_BITS,
    BOOTH_UNITS,
};
use crate::formats::{pack_normalize_round, unpack, EncodedScalar, FormatDescriptor, RoundStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepReport {
    pub active_lanes: u32,
    /// Zero-skipped lanes plus padding lanes.
    pub skipped_lanes: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DotOutcome {
    pub result: EncodedScalar,
    pub status: RoundStatus,
    pub stats: PipelineStats,
}

fn mismatch(expected: FormatDescriptor, got: FormatDescriptor) -> MacError {
    MacError::ModeMismatch { expected: expected.name(), got: got.name() }
}

/// One vector operation: multiplies every lane pair and folds the products
/// into `acc`.
///
/// Special values are checked before zero-skipping, so `0 * inf` still
/// poisons the accumulator. Padding lanes beyond `valid_lanes` always count
/// as skipped.
pub fn simd_mac_step(
    va: &VectorWord,
    vb: &VectorWord,
    acc: &mut WideAccumulator,
    cfg: &MacConfig,
) -> Result<StepReport, MacError> {
    for m in [va.mode(), vb.mode()] {
        if m != cfg.mode {
            return Err(mismatch(cfg.mode.format, m.format));
        }
    }
    if acc.format != cfg.mode.format {
        return Err(mismatch(cfg.mode.format, acc.format));
    }
    if acc.accumulation != cfg.accumulation {
        return Err(MacError::Accumulation(acc.accumulation, acc.format.name()));
    }
    let lanes = cfg.mode.lanes;
    let valid = va.valid_lanes().min(vb.valid_lanes());
    let mut report = StepReport { active_lanes: 0, skipped_lanes: lanes - valid };
    let mut products: ArrayVec<LaneProduct, { BOOTH_UNITS as usize }> = ArrayVec::new();
    for i in 0..valid {
        let p = lane_multiply(&unpack(va.lane(i)), &unpack(vb.lane(i)), &cfg.mode);
        if p.is_special() {
            acc.absorb(&p);
            report.active_lanes += 1;
        } else if p.flags.zero && cfg.zero_skip {
            report.skipped_lanes += 1;
        } else {
            report.active_lanes += 1;
            products.push(p);
        }
    }
    let len = acc.limbs();
    let aligned = match cfg.accumulation {
        Accumulation::ExactWide => align_to_anchor(&products, acc.unit_scale, len),
        Accumulation::AlignToMax => exponent_max_align(&products, ALIGN_GUARD_BITS, len),
    };
    if !aligned.addends.is_empty() {
        let sum = csa_reduce(&aligned.addends, len);
        acc.add_aligned(sum, aligned.anchor, aligned.sticky);
    }
    Ok(report)
}

fn run_dot(
    a: &[EncodedScalar],
    b: &[EncodedScalar],
    cfg: &MacConfig,
    mut ops: Option<&mut Vec<VectorOpDesc>>,
) -> Result<(WideAccumulator, PipelineStats), MacError> {
    cfg.validate()?;
    if a.len() != b.len() {
        return Err(MacError::LengthMismatch(a.len(), b.len()));
    }
    let lanes = cfg.mode.lanes as usize;
    let mut acc = WideAccumulator::new(&cfg.mode, cfg.accumulation);
    let (mut vector_ops, mut skipped) = (0u64, 0u64);
    for (ca, cb) in a.chunks(lanes).zip(b.chunks(lanes)) {
        let va = VectorWord::pack(ca, cfg.mode)?;
        let vb = VectorWord::pack(cb, cfg.mode)?;
        let r = simd_mac_step(&va, &vb, &mut acc, cfg)?;
        vector_ops += 1;
        skipped += r.skipped_lanes as u64;
        if let Some(ops) = ops.as_deref_mut() {
            ops.push(VectorOpDesc { mode: cfg.mode, active_lanes: r.active_lanes });
        }
    }
    Ok((acc, PipelineStats::from_counts(vector_ops, vector_ops * lanes as u64, skipped)))
}

/// Accumulates `sum(a[i] * b[i])` and returns the raw register.
pub fn dot_product_acc(
    a: &[EncodedScalar],
    b: &[EncodedScalar],
    cfg: &MacConfig,
) -> Result<(WideAccumulator, PipelineStats), MacError> {
    run_dot(a, b, cfg, None)
}

/// Stage V: rounds the register (toward +inf) into `out`.
pub fn finalize(acc: &WideAccumulator, out: FormatDescriptor) -> (EncodedScalar, RoundStatus) {
    let special = |bits: u16, status: RoundStatus| (EncodedScalar::wrap(bits as u32, out), status);
    match acc.poison {
        Poison::Invalid => special(out.nan_bits(), RoundStatus { invalid: true, ..Default::default() }),
        Poison::PosInf | Poison::NegInf => {
            let negative = acc.poison == Poison::NegInf;
            let status = if out.has_inf() {
                RoundStatus::default()
            } else if out.is_fxp() {
                RoundStatus { overflow: true, inexact: true, invalid: false }
            } else {
                RoundStatus { invalid: true, ..Default::default() }
            };
            special(out.inf_bits(negative), status)
        }
        Poison::None => {
            let packed = pack_normalize_round(&acc.value, acc.unit_scale, out);
            let mut status = packed.status;
            status.overflow |= acc.overflowed;
            status.inexact |= acc.overflowed || acc.inexact;
            (packed.scalar, status)
        }
    }
}

/// Dot product of two equal-length operand vectors, rounded once into
/// `cfg.output_format`. An empty input yields zero in zero cycles.
pub fn dot_product(a: &[EncodedScalar], b: &[EncodedScalar], cfg: &MacConfig) -> Result<DotOutcome, MacError> {
    check_formats(a, b, cfg)?;
    let (acc, stats) = dot_product_acc(a, b, cfg)?;
    let (result, status) = finalize(&acc, cfg.output_format);
    Ok(DotOutcome { result, status, stats })
}

/// [`dot_product`] plus the per-stage pipeline trace.
pub fn dot_product_traced(
    a: &[EncodedScalar],
    b: &[EncodedScalar],
    cfg: &MacConfig,
) -> Result<(DotOutcome, Vec<String>), MacError> {
    check_formats(a, b, cfg)?;
    let mut ops = Vec::new();
    let (acc, stats) = run_dot(a, b, cfg, Some(&mut ops))?;
    let (result, status) = finalize(&acc, cfg.output_format);
    Ok((DotOutcome { result, status, stats }, pipeline_trace(&ops)))
}

fn check_formats(a: &[EncodedScalar], b: &[EncodedScalar], cfg: &MacConfig) -> Result<(), MacError> {
    match a.iter().chain(b).find(|s| s.format() != cfg.mode.format) {
        Some(s) => Err(mismatch(cfg.mode.format, s.format())),
        None => Ok(()),
    }
}

/// Independent dot products evaluated in parallel; results keep input order.
pub fn dot_products_batch(
    pairs: &[(Vec<EncodedScalar>, Vec<EncodedScalar>)],
    cfg: &MacConfig,
) -> Result<Vec<DotOutcome>, MacError> {
    pairs.par_iter().map(|(a, b)| dot_product(a, b, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::decode;

    fn scalars(bits: &[u32], f: FormatDescriptor) -> Vec<EncodedScalar> {
        bits.iter().map(|&b| EncodedScalar::wrap(b, f)).collect()
    }

    #[test]
    fn empty_is_zero_in_zero_cycles() {
        let cfg = MacConfig::new(FormatDescriptor::bf16());
        let out = dot_product(&[], &[], &cfg).unwrap();
        assert_eq!(out.result.bits(), 0);
        assert_eq!(out.stats.cycles, 0);
        assert_eq!(out.stats.vector_ops, 0);
    }

    #[test]
    fn fxp_small_dot() {
        let f: FormatDescriptor = "fxp8:f4".parse().unwrap();
        // 1.5*2 + (-1)*0.25 + 0*3 = 2.75
        let a = scalars(&[0x18, 0xF0, 0x00], f);
        let b = scalars(&[0x20, 0x04, 0x30], f);
        let out = dot_product(&a, &b, &MacConfig::new(f)).unwrap();
        assert_eq!(decode(out.result).to_f64(), 2.75);
        assert_eq!(out.stats.vector_ops, 1);
        assert_eq!(out.stats.cycles, 5);
        // One zero lane plus one padding lane skipped.
        assert_eq!(out.stats.skipped_lanes, 2);
        assert_eq!(out.stats.mac_ops, 2);
    }

    #[test]
    fn zero_times_inf_poisons_even_with_zero_skip() {
        let f = FormatDescriptor::bf16();
        let a = scalars(&[0x0000, 0x3F80], f);
        let b = scalars(&[0x7F80, 0x3F80], f);
        let out = dot_product(&a, &b, &MacConfig::new(f)).unwrap();
        assert!(decode(out.result).to_f64().is_nan());
        assert!(out.status.invalid);
    }

    #[test]
    fn infinities_propagate() {
        let f = FormatDescriptor::fp16_e5m10();
        let a = scalars(&[0x7C00, 0x3C00], f);
        let b = scalars(&[0x3C00, 0x3C00], f);
        let out = dot_product(&a, &b, &MacConfig::new(f)).unwrap();
        assert_eq!(out.result.bits(), 0x7C00);
    }

    #[test]
    fn mismatches_are_errors() {
        let f = FormatDescriptor::bf16();
        let cfg = MacConfig::new(f);
        let a = scalars(&[0x3F80], f);
        assert!(matches!(dot_product(&a, &[], &cfg), Err(MacError::LengthMismatch(1, 0))));
        let other = scalars(&[0x38], FormatDescriptor::fp8_e4m3());
        assert!(matches!(dot_product(&a, &other, &cfg), Err(MacError::ModeMismatch { .. })));
    }

    #[test]
    fn step_rejects_wrong_mode() {
        let f = FormatDescriptor::bf16();
        let cfg = MacConfig::new(f);
        let other = MacConfig::new(FormatDescriptor::posit8());
        let va = VectorWord::pack(&[], other.mode).unwrap();
        let mut acc = WideAccumulator::new(&cfg.mode, cfg.accumulation);
        assert!(simd_mac_step(&va, &va, &mut acc, &cfg).is_err());
    }

    #[test]
    fn traced_dot_emits_stage_lines() {
        let f = FormatDescriptor::posit16();
        let a = scalars(&[0x4000, 0x4000], f);
        let (out, trace) = dot_product_traced(&a, &a, &MacConfig::new(f)).unwrap();
        assert_eq!(decode(out.result).to_f64(), 2.0);
        assert_eq!(trace.len(), 10);
    }
}
