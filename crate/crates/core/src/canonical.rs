//! Byte-stable JSON output: sorted object keys, reals rounded to nine
//! significant digits (never fewer than nine decimal places) and printed
//! without a trailing `.0`.

use serde_json::Value;

/// Significant digits kept when printing reals.
pub const SIGNIFICANT_DIGITS: usize = 9;
/// Decimal places kept at least, so values of any magnitude survive a
/// round trip to within 1e-9.
pub const DECIMAL_PLACES: usize = 9;

/// Round `v` to nine significant digits.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { 0.0 } else { v };
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v)
        .parse()
        .unwrap_or(v)
}

/// Round `v` to nine significant digits or nine decimal places, whichever
/// keeps more.
pub fn round_real(v: f64) -> f64 {
    if v.abs() < 1.0 {
        return round_sig(v);
    }
    format!("{:.*}", DECIMAL_PLACES, v).parse().unwrap_or(v)
}

/// Shortest decimal text of `v` after [`round_real`].
pub fn fmt_real(v: f64) -> String {
    let r = round_real(v);
    if r == 0.0 {
        // also folds -0
        return "0".to_string();
    }
    format!("{r}")
}

/// Serialize a JSON value canonically. Non-integer numbers go through
/// [`fmt_real`]; integers are printed verbatim.
pub fn to_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, &mut out);
    out
}

fn write_value(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                out.push_str(&n.to_string());
            } else {
                out.push_str(&fmt_real(n.as_f64().unwrap_or(0.0)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(key.clone()).to_string());
                out.push(':');
                write_value(&map[key], out);
            }
            out.push('}');
        }
    }
}

/// JSON number for a real, stored as an integer when it is integral so the
/// canonical text has no fractional part.
pub fn real_value(v: f64) -> Value {
    let r = round_real(v);
    if r.fract() == 0.0 && r.abs() < 9.0e15 {
        Value::from(r as i64)
    } else {
        serde_json::Number::from_f64(r)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_real(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_real(4.0), "4");
        assert_eq!(fmt_real(-0.0), "0");
        assert_eq!(fmt_real(2.0 / 3.0 * 100.0), "66.666666667");
        assert_eq!(fmt_real(0.0123456789012), "0.0123456789");
        assert_eq!(fmt_real(1e-7), "0.0000001");
        let back: f64 = fmt_real(1.0 / 3.0).parse().unwrap();
        assert!((back - 1.0 / 3.0).abs() < 1e-9);
        for v in [3.1234567891234, -97.000000000600001, 12345.678901234] {
            let back: f64 = fmt_real(v).parse().unwrap();
            assert!((back - v).abs() < 1e-9, "{v} -> {}", fmt_real(v));
        }
    }

    #[test]
    fn keys_are_sorted() {
        let v = json!({"b": 1, "a": [real_value(0.5), "x"], "c": {"z": null, "y": true}});
        assert_eq!(to_string(&v), r#"{"a":[0.5,"x"],"b":1,"c":{"y":true,"z":null}}"#);
    }

    #[test]
    fn integral_reals_print_without_fraction() {
        assert_eq!(to_string(&real_value(5.0)), "5");
        assert_eq!(to_string(&real_value(-2.5)), "-2.5");
        assert_eq!(to_string(&json!(2.0)), "2");
    }
}
