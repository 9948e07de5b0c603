use anyhow::Context;
use polaron_core::formats::{flags_label, FormatDescriptor};
use polaron_core::mac::{
    finalize, parse_vector_csv, pipeline_trace, run_pipeline, simd_mac_step, VectorOpDesc, WideAccumulator,
};
use polaron_core::MacConfig;

use crate::{MacArgs, Status};

/// Each row is one vector operation rounded into the output format; the
/// stream of rows is then timed as a single pipeline run.
pub fn run(a: &MacArgs) -> anyhow::Result<Status> {
    let text = std::fs::read_to_string(&a.vectors).with_context(|| format!("reading {}", a.vectors.display()))?;
    let cases = parse_vector_csv(&text)?;
    let out_fmt: Option<FormatDescriptor> = a.output_format.as_deref().map(str::parse).transpose()?;
    let mut ops = Vec::with_capacity(cases.len());
    let mut mismatches = 0usize;
    println!("line,mode,result_hex,flags,status,expect");
    for c in &cases {
        let f = c.format();
        let cfg = MacConfig::new(f)
            .with_zero_skip(!a.datapath.no_zero_skip)
            .with_accumulation(a.datapath.accumulation.into())
            .with_output(out_fmt.unwrap_or(f));
        cfg.validate()?;
        let mut acc = WideAccumulator::new(&cfg.mode, cfg.accumulation);
        let r = simd_mac_step(&c.a, &c.b, &mut acc, &cfg).with_context(|| format!("line {}", c.line))?;
        ops.push(VectorOpDesc { mode: cfg.mode, active_lanes: r.active_lanes });
        let (res, status) = finalize(&acc, cfg.output_format);
        let verdict = match c.expect {
            None => "-".to_string(),
            Some(e) if e == res.bits() => "ok".to_string(),
            Some(e) => {
                mismatches += 1;
                format!("MISMATCH expected 0x{e:0w$X}", w = cfg.output_format.total_bits.div_ceil(4) as usize)
            }
        };
        println!("{},{},{},{},{},{}", c.line, f, res.hex(), flags_label(res), status_label(&status), verdict);
    }
    let run = run_pipeline(&ops, a.mode_switch_penalty);
    let t = &run.total;
    println!();
    println!("cycles = {}", t.cycles);
    println!("vector_ops = {}", t.vector_ops);
    println!("mac_ops = {}", t.mac_ops);
    println!("skipped_lanes = {}", t.skipped_lanes);
    println!("lane_slots = {}", t.lane_slots);
    println!("lane_utilization = {:.6}", t.lane_utilization);
    println!("mode_switches = {}", run.mode_switches);
    for (mode, share) in &run.by_mode {
        println!(
            "mode {mode}: vector_ops = {}, mac_ops = {}, skipped_lanes = {}, lane_utilization = {:.6}",
            share.vector_ops, share.mac_ops, share.skipped_lanes, share.lane_utilization
        );
    }
    if a.trace {
        println!();
        for line in pipeline_trace(&ops) {
            println!("{line}");
        }
    }
    if mismatches > 0 {
        eprintln!("{mismatches} row(s) differ from their expected result");
        return Ok(Status::VerifyFailed);
    }
    Ok(Status::Ok)
}

fn status_label(s: &polaron_core::formats::RoundStatus) -> String {
    let mut parts = Vec::new();
    if s.inexact {
        parts.push("inexact");
    }
    if s.overflow {
        parts.push("overflow");
    }
    if s.invalid {
        parts.push("invalid");
    }
    if parts.is_empty() {
        "exact".into()
    } else {
        parts.join("|")
    }
}
