use anyhow::{bail, Context};
use polaron_core::formats::{conformance_csv, decode, encode_f64, flags_label, unpack, EncodedScalar, FormatDescriptor};
use polaron_core::RoundingMode;

use crate::{FmtArgs, Status};

pub fn parse_bits(s: &str) -> anyhow::Result<u32> {
    let t = s.trim().replace('_', "");
    let v = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u32::from_str_radix(hex, 16),
        None => t.parse(),
    };
    v.with_context(|| format!("invalid bit pattern `{s}`"))
}

fn report(s: EncodedScalar) -> String {
    let u = unpack(s);
    format!(
        "format = {}\nbits = {}\nvalue = {}\nflags = {}\nsign = {}\nscale = {}\nsignificand = {:#x}\npoint = {}\n",
        s.format(),
        s.hex(),
        decode(s),
        flags_label(s),
        if u.negative { 1 } else { 0 },
        u.scale,
        u.significand,
        u.point,
    )
}

pub fn run(a: &FmtArgs) -> anyhow::Result<Status> {
    let f: FormatDescriptor = a.format.parse()?;
    if a.table {
        if f.total_bits > 8 {
            bail!("--table is limited to formats of at most 8 bits; {f} has {}", f.total_bits);
        }
        print!("{}", conformance_csv(f));
        return Ok(Status::Ok);
    }
    let s = match (&a.bits, &a.value) {
        (Some(b), None) => {
            let bits = parse_bits(b)?;
            EncodedScalar::new(bits, f)?
        }
        (None, Some(v)) => {
            let x: f64 = v.trim().parse().with_context(|| format!("invalid value `{v}`"))?;
            let mode = if a.toward_positive { RoundingMode::TowardPositive } else { RoundingMode::NearestEven };
            encode_f64(x, f, mode)
        }
        _ => bail!("give exactly one of --bits, --value or --table"),
    };
    print!("{}", report(s));
    Ok(Status::Ok)
}
