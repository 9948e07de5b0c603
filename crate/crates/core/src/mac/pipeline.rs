//! Cycle and utilization model of the five-stage pipeline.

use std::collections::BTreeMap;

use super::PrecisionMode;

/// Cycles before the first result leaves the pipeline.
pub const PIPELINE_FILL: u64 = 4;

const STAGES: [&str; 5] = ["S1:unpack", "S2:multiply", "S3:align", "S4:accumulate", "S5:normalize"];

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct PipelineStats {
    pub cycles: u64,
    pub vector_ops: u64,
    /// Multiplies performed on non-skipped lanes.
    pub mac_ops: u64,
    pub skipped_lanes: u64,
    /// Lane slots issued (`lanes * vector_ops` summed over modes).
    pub lane_slots: u64,
    pub lane_utilization: f64,
}

impl PipelineStats {
    /// Stats for a stream of `vector_ops` issues with no mode switches.
    pub fn from_counts(vector_ops: u64, lane_slots: u64, skipped_lanes: u64) -> Self {
        Self::with_switches(vector_ops, lane_slots, skipped_lanes, 0)
    }

    fn with_switches(vector_ops: u64, lane_slots: u64, skipped_lanes: u64, stall: u64) -> Self {
        let mac_ops = lane_slots - skipped_lanes;
        PipelineStats {
            cycles: if vector_ops == 0 { 0 } else { vector_ops + PIPELINE_FILL + stall },
            vector_ops,
            mac_ops,
            skipped_lanes,
            lane_slots,
            lane_utilization: if lane_slots == 0 { 0.0 } else { mac_ops as f64 / lane_slots as f64 },
        }
    }

    /// Concatenates two independent streams run back to back (each with its
    /// own fill).
    pub fn then(&self, other: &PipelineStats) -> PipelineStats {
        let mut out = Self::from_counts(
            self.vector_ops + other.vector_ops,
            self.lane_slots + other.lane_slots,
            self.skipped_lanes + other.skipped_lanes,
        );
        out.cycles = self.cycles + other.cycles;
        out
    }
}

/// One issued vector operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VectorOpDesc {
    pub mode: PrecisionMode,
    /// Lanes doing real work (not zero-skipped, not padding).
    pub active_lanes: u32,
}

/// Per-mode slice of a mixed stream.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeShare {
    pub vector_ops: u64,
    pub mac_ops: u64,
    pub skipped_lanes: u64,
    pub lane_utilization: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineRun {
    pub total: PipelineStats,
    pub by_mode: BTreeMap<String, ModeShare>,
    pub mode_switches: u64,
}

/// Runs a stream of vector ops through the cycle model, charging
/// `mode_switch_penalty` cycles for each change of mode between consecutive
/// issues.
pub fn run_pipeline(ops: &[VectorOpDesc], mode_switch_penalty: u64) -> PipelineRun {
    let mut by_mode: BTreeMap<String, ModeShare> = BTreeMap::new();
    let mut switches = 0u64;
    let (mut slots, mut skipped) = (0u64, 0u64);
    for (i, op) in ops.iter().enumerate() {
        if i > 0 && ops[i - 1].mode != op.mode {
            switches += 1;
        }
        let lanes = op.mode.lanes as u64;
        let active = (op.active_lanes as u64).min(lanes);
        slots += lanes;
        skipped += lanes - active;
        let share = by_mode.entry(op.mode.format.name()).or_default();
        share.vector_ops += 1;
        share.mac_ops += active;
        share.skipped_lanes += lanes - active;
    }
    for share in by_mode.values_mut() {
        let slots = share.mac_ops + share.skipped_lanes;
        share.lane_utilization = share.mac_ops as f64 / slots as f64;
    }
    let total = PipelineStats::with_switches(ops.len() as u64, slots, skipped, switches * mode_switch_penalty);
    PipelineRun { total, by_mode, mode_switches: switches }
}

/// One line per occupied stage per cycle:
/// `cycle=<c> stage=<S> op=<i> mode=<format> lanes=<active>/<total>`.
pub fn pipeline_trace(ops: &[VectorOpDesc]) -> Vec<String> {
    let mut lines = Vec::new();
    if ops.is_empty() {
        return lines;
    }
    let last_cycle = ops.len() as u64 + PIPELINE_FILL;
    for cycle in 1..=last_cycle {
        for (s, stage) in STAGES.iter().enumerate() {
            // Op i enters S1 at cycle i + 1.
            let Some(i) = (cycle as usize).checked_sub(1 + s) else { continue };
            if let Some(op) = ops.get(i) {
                lines.push(format!(
                    "cycle={cycle} stage={stage} op={i} mode={} lanes={}/{}",
                    op.mode.format, op.active_lanes, op.mode.lanes
                ));
            }
        }
    }
    lines
}
