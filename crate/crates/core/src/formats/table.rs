use super::{decode, unpack, EncodedScalar, FormatDescriptor, Value};

/// Pipe-separated flag list for a pattern, e.g. `normal`, `subnormal|neg`.
pub fn flags_label(s: EncodedScalar) -> String {
    let u = unpack(s);
    let mut flags = Vec::new();
    match decode(s) {
        Value::NaN => flags.push("nan"),
        Value::NaR => flags.push("nar"),
        Value::Inf { .. } => flags.push("inf"),
        Value::Finite(_) if u.flags.is_zero => flags.push("zero"),
        Value::Finite(_) if u.flags.is_subnormal => flags.push("subnormal"),
        Value::Finite(_) => flags.push("normal"),
    }
    if u.negative {
        flags.push("neg");
    }
    flags.join("|")
}

/// Conformance table `bits_hex,value_decimal,flags` over every pattern.
pub fn conformance_csv(f: FormatDescriptor) -> String {
    let mut out = String::from("bits_hex,value_decimal,flags\n");
    for s in EncodedScalar::all(f) {
        out.push_str(&format!("{},{},{}\n", s.hex(), decode(s), flags_label(s)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e4m3_table_rows() {
        let csv = conformance_csv(FormatDescriptor::fp8_e4m3());
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 257);
        assert_eq!(lines[0], "bits_hex,value_decimal,flags");
        assert_eq!(lines[1 + 0x38], "0x38,1,normal");
        assert_eq!(lines[1 + 0x7E], "0x7E,448,normal");
        assert_eq!(lines[1 + 0x7F], "0x7F,nan,nan");
        assert_eq!(lines[1 + 0x01], "0x01,0.001953125,subnormal");
        assert_eq!(lines[1 + 0x80], "0x80,0,zero|neg");
    }

    #[test]
    fn posit_table_marks_nar() {
        let csv = conformance_csv(FormatDescriptor::posit8());
        assert!(csv.contains("0x80,nar,nar\n"));
        assert!(csv.contains("0xC0,-1,normal|neg\n"));
    }
}
