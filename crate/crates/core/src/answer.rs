//! Final answers: a number (with optional unit), a ratio in lowest terms, or
//! a textual descriptor.

use std::fmt;

use serde_json::Value;
use thiserror::Error;

use crate::canonical;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AnswerType {
    Numerical,
    Ratio,
    Descriptor,
}

impl AnswerType {
    pub const ALL: [AnswerType; 3] = [AnswerType::Numerical, AnswerType::Ratio, AnswerType::Descriptor];

    pub fn as_str(self) -> &'static str {
        match self {
            AnswerType::Numerical => "Numerical",
            AnswerType::Ratio => "Ratio",
            AnswerType::Descriptor => "Descriptor",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "numerical" => Some(AnswerType::Numerical),
            "ratio" => Some(AnswerType::Ratio),
            "descriptor" => Some(AnswerType::Descriptor),
            _ => None,
        }
    }
}

impl fmt::Display for AnswerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnswerValue {
    Numerical { value: f64, unit: Option<String> },
    /// Always stored in lowest terms, both parts positive.
    Ratio { numerator: u64, denominator: u64 },
    Descriptor(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnswerError {
    #[error("ratio parts must be positive integers: `{0}`")]
    BadRatio(String),
    #[error("not a number: `{0}`")]
    BadNumber(String),
    #[error("descriptor must be nonempty")]
    EmptyDescriptor,
    #[error("answer must be a number or a string")]
    BadShape,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl AnswerValue {
    pub fn number(value: f64) -> Self {
        AnswerValue::Numerical { value, unit: None }
    }

    pub fn degrees(value: f64) -> Self {
        AnswerValue::Numerical {
            value,
            unit: Some("degrees".into()),
        }
    }

    pub fn ratio(numerator: u64, denominator: u64) -> Result<Self, AnswerError> {
        if numerator == 0 || denominator == 0 {
            return Err(AnswerError::BadRatio(format!("{numerator}:{denominator}")));
        }
        let g = gcd(numerator, denominator);
        Ok(AnswerValue::Ratio {
            numerator: numerator / g,
            denominator: denominator / g,
        })
    }

    pub fn descriptor(text: &str) -> Result<Self, AnswerError> {
        if text.trim().is_empty() {
            return Err(AnswerError::EmptyDescriptor);
        }
        Ok(AnswerValue::Descriptor(text.to_string()))
    }

    pub fn answer_type(&self) -> AnswerType {
        match self {
            AnswerValue::Numerical { .. } => AnswerType::Numerical,
            AnswerValue::Ratio { .. } => AnswerType::Ratio,
            AnswerValue::Descriptor(_) => AnswerType::Descriptor,
        }
    }

    /// Parse `a:b` or `a/b` (surrounding whitespace allowed).
    pub fn parse_ratio(text: &str) -> Result<Self, AnswerError> {
        let bad = || AnswerError::BadRatio(text.to_string());
        let (n, d) = text
            .split_once(':')
            .or_else(|| text.split_once('/'))
            .ok_or_else(bad)?;
        let n: u64 = n.trim().parse().map_err(|_| bad())?;
        let d: u64 = d.trim().parse().map_err(|_| bad())?;
        Self::ratio(n, d).map_err(|_| bad())
    }

    /// Interpret surface text under a known answer type.
    pub fn parse_as(text: &str, ty: AnswerType, unit: Option<&str>) -> Result<Self, AnswerError> {
        match ty {
            AnswerType::Numerical => {
                let value: f64 = text
                    .trim()
                    .parse()
                    .map_err(|_| AnswerError::BadNumber(text.to_string()))?;
                if !value.is_finite() {
                    return Err(AnswerError::BadNumber(text.to_string()));
                }
                Ok(AnswerValue::Numerical {
                    value,
                    unit: unit.map(str::to_string),
                })
            }
            AnswerType::Ratio => Self::parse_ratio(text),
            AnswerType::Descriptor => Self::descriptor(text),
        }
    }

    /// Infer the type from surface text: ratio syntax, then number, else descriptor.
    pub fn infer(text: &str) -> Result<Self, AnswerError> {
        if let Ok(r) = Self::parse_ratio(text) {
            return Ok(r);
        }
        if let Ok(n) = Self::parse_as(text, AnswerType::Numerical, None) {
            return Ok(n);
        }
        Self::descriptor(text)
    }

    /// Decode the wire form: a JSON number or string, plus an optional unit.
    pub fn from_json(value: &Value, unit: Option<&str>) -> Result<Self, AnswerError> {
        match value {
            Value::Number(n) => {
                let value = n.as_f64().ok_or(AnswerError::BadShape)?;
                Ok(AnswerValue::Numerical {
                    value,
                    unit: unit.map(str::to_string),
                })
            }
            Value::String(s) => match Self::infer(s)? {
                AnswerValue::Numerical { value, .. } => Ok(AnswerValue::Numerical {
                    value,
                    unit: unit.map(str::to_string),
                }),
                other => Ok(other),
            },
            _ => Err(AnswerError::BadShape),
        }
    }

    /// `(value, unit)` for the wire form.
    pub fn to_json(&self) -> (Value, Option<&str>) {
        match self {
            AnswerValue::Numerical { value, unit } => {
                (canonical::real_value(*value), unit.as_deref())
            }
            AnswerValue::Ratio {
                numerator,
                denominator,
            } => (Value::from(format!("{numerator}:{denominator}")), None),
            AnswerValue::Descriptor(s) => (Value::from(s.clone()), None),
        }
    }
}

impl fmt::Display for AnswerValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnswerValue::Numerical { value, unit } => {
                write!(f, "{}", canonical::fmt_real(*value))?;
                if let Some(u) = unit {
                    write!(f, " {u}")?;
                }
                Ok(())
            }
            AnswerValue::Ratio {
                numerator,
                denominator,
            } => write!(f, "{numerator}:{denominator}"),
            AnswerValue::Descriptor(s) => f.write_str(s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_reduce() {
        assert_eq!(
            AnswerValue::parse_ratio("4:2").unwrap(),
            AnswerValue::Ratio { numerator: 2, denominator: 1 }
        );
        assert_eq!(
            AnswerValue::parse_ratio(" 1 / 3 ").unwrap(),
            AnswerValue::Ratio { numerator: 1, denominator: 3 }
        );
        assert!(AnswerValue::parse_ratio("0:3").is_err());
        assert!(AnswerValue::parse_ratio("1.5:3").is_err());
        assert!(AnswerValue::parse_ratio("-1:3").is_err());
    }

    #[test]
    fn inference() {
        assert_eq!(AnswerValue::infer("30").unwrap(), AnswerValue::number(30.0));
        assert_eq!(AnswerValue::infer("2:1").unwrap().answer_type(), AnswerType::Ratio);
        assert_eq!(
            AnswerValue::infer("isosceles right triangle").unwrap(),
            AnswerValue::Descriptor("isosceles right triangle".into())
        );
        assert!(AnswerValue::infer("  ").is_err());
    }

    #[test]
    fn wire_form() {
        let v = AnswerValue::degrees(30.0);
        let (json, unit) = v.to_json();
        assert_eq!(AnswerValue::from_json(&json, unit).unwrap(), v);
        let r = AnswerValue::ratio(2, 1).unwrap();
        let (json, unit) = r.to_json();
        assert_eq!(json, Value::from("2:1"));
        assert_eq!(AnswerValue::from_json(&json, unit).unwrap(), r);
        assert!(AnswerValue::from_json(&Value::Bool(true), None).is_err());
    }
}
