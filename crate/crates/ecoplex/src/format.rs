//! Number formatting shared by every artifact: decimal, at most 12
//! significant digits.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const SIGNIFICANT_DIGITS: usize = 12;

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let s = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let r: f64 = s.parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// `Display` of an f64 never uses exponent notation, and after rounding it
/// prints the shortest decimal that round-trips.
pub fn fmt_num(x: f64) -> String {
    format!("{}", round_sig(x))
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn to_json(value: &impl Serialize) -> CliResult<String> {
    let mut v = serde_json::to_value(value).map_err(|e| CliError::Usage(format!("serialization failed: {e}")))?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Usage(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    write_text(path, &to_json(value)?)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits_no_exponent() {
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(std::f64::consts::FRAC_1_SQRT_2), "0.707106781187");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(2.0), "2");
        assert_eq!(fmt_num(1.234e-14), "0.00000000000001234");
        assert_eq!(fmt_num(123456789012345.0), "123456789012000");
    }

    #[test]
    fn json_floats_are_rounded() {
        let s = to_json(&serde_json::json!({"a": 1.0 / 3.0, "b": [2, 0.1 + 0.2]})).unwrap();
        assert!(s.contains("0.333333333333"));
        assert!(s.contains("0.3\n") || s.contains("0.3,") || s.contains("0.3\r"));
    }
}
