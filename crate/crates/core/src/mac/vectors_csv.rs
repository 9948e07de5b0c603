//! Test-vector files: one packed vector operation per line,
//! `mode,a_hex,b_hex,expect_hex` (`expect_hex` may be empty).

use super::{MacError, PrecisionMode, VectorWord};
use crate::formats::FormatDescriptor;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorCase {
    pub line: usize,
    pub a: VectorWord,
    pub b: VectorWord,
    pub expect: Option<u16>,
}

impl VectorCase {
    pub fn format(&self) -> FormatDescriptor {
        self.a.mode().format
    }
}

fn parse_hex(s: &str) -> Option<u128> {
    let s = s.trim();
    let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    u128::from_str_radix(&digits.replace('_', ""), 16).ok()
}

/// Parses a vector file. Blank lines, `#` comments and a leading header row
/// are ignored.
pub fn parse_vector_csv(text: &str) -> Result<Vec<VectorCase>, MacError> {
    let mut cases = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') || row.to_ascii_lowercase().starts_with("mode,") {
            continue;
        }
        let err = |msg: String| MacError::Csv { line, msg };
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(err(format!("expected 3 or 4 fields, found {}", fields.len())));
        }
        let format: FormatDescriptor = fields[0].parse().map_err(|e| err(format!("{e}")))?;
        let mode = PrecisionMode::new(format);
        let word = |s: &str, what: &str| -> Result<VectorWord, MacError> {
            let v = parse_hex(s).ok_or_else(|| err(format!("bad {what} hex `{s}`")))?;
            VectorWord::from_payload(v, mode).ok_or_else(|| err(format!("{what} has bits above lane {}", mode.lanes)))
        };
        let a = word(fields[1], "a")?;
        let b = word(fields[2], "b")?;
        let expect = match fields.get(3) {
            None | Some(&"") => None,
            Some(s) => {
                let v = parse_hex(s).ok_or_else(|| err(format!("bad expect hex `{s}`")))?;
                if v >> format.total_bits != 0 {
                    return Err(err(format!("expect does not fit {format}")));
                }
                Some(v as u16)
            }
        };
        cases.push(VectorCase { line, a, b, expect });
    }
    Ok(cases)
}

/// Writes cases back out with a header row; payloads are zero-padded to the
/// lanes in use.
pub fn format_vector_csv(cases: &[VectorCase]) -> String {
    let mut out = String::from("mode,a_hex,b_hex,expect_hex\n");
    for c in cases {
        let mode = c.a.mode();
        let digits = (mode.lanes * mode.format.total_bits).div_ceil(4) as usize;
        let expect = c
            .expect
            .map(|e| format!("0x{:0w$X}", e, w = mode.format.total_bits.div_ceil(4) as usize))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},0x{:0d$X},0x{:0d$X},{}\n",
            mode.format,
            c.a.payload(),
            c.b.payload(),
            expect,
            d = digits
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let text = "mode,a_hex,b_hex,expect_hex\n# comment\nbf16,0x3F803F80,0x40004000,0x4080\nposit8,0x40,0x40,\n";
        let cases = parse_vector_csv(text).unwrap();
        assert_eq!(cases.len(), 2);
        assert_eq!(cases[0].expect, Some(0x4080));
        assert_eq!(cases[1].expect, None);
        assert_eq!(cases[0].line, 3);
        let again = parse_vector_csv(&format_vector_csv(&cases)).unwrap();
        assert_eq!(again.iter().map(|c| (c.a, c.b, c.expect)).collect::<Vec<_>>(),
                   cases.iter().map(|c| (c.a, c.b, c.expect)).collect::<Vec<_>>());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_vector_csv("bf16,0x1,0x1\nfp9,0,0\n").unwrap_err();
        assert!(matches!(e, MacError::Csv { line: 2, .. }));
        let e = parse_vector_csv("fxp4:f2,0x1_0000_0000_0000_0000,0\n").unwrap_err();
        assert!(matches!(e, MacError::Csv { line: 1, .. }));
        assert!(parse_vector_csv("bf16,zz,0\n").is_err());
    }
}
