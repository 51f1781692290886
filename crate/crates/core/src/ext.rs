//! Points of the Riemann sphere, cardinalities in ℕ ∪ {∞}, and the
//! tolerance conventions shared by the whole crate.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

/// Relative tolerance used when merging points of a spectral set.
pub const MERGE_TOL: f64 = 1e-9;

/// `|x - y| <= tol * max(1, |x|, |y|)`.
pub fn close(x: Complex64, y: Complex64, tol: f64) -> bool {
    let scale = 1f64.max(x.norm()).max(y.norm());
    (x - y).norm() <= tol * scale
}

/// A point of ℂ ∪ {∞}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtComplex {
    Finite(Complex64),
    Infinity,
}

impl ExtComplex {
    pub fn finite(&self) -> Option<Complex64> {
        match self {
            ExtComplex::Finite(z) => Some(*z),
            ExtComplex::Infinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtComplex::Infinity)
    }

    pub fn close_to(&self, other: &ExtComplex, tol: f64) -> bool {
        match (self, other) {
            (ExtComplex::Finite(a), ExtComplex::Finite(b)) => close(*a, *b, tol),
            (ExtComplex::Infinity, ExtComplex::Infinity) => true,
            _ => false,
        }
    }

    pub fn recip(&self) -> ExtComplex {
        match self {
            ExtComplex::Infinity => ExtComplex::Finite(Complex64::new(0.0, 0.0)),
            ExtComplex::Finite(z) if z.norm() == 0.0 => ExtComplex::Infinity,
            ExtComplex::Finite(z) => ExtComplex::Finite(z.inv()),
        }
    }
}

impl From<Complex64> for ExtComplex {
    fn from(z: Complex64) -> Self {
        if z.re.is_finite() && z.im.is_finite() {
            ExtComplex::Finite(z)
        } else {
            ExtComplex::Infinity
        }
    }
}

impl fmt::Display for ExtComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtComplex::Finite(z) => write!(f, "{}", format_complex(*z)),
            ExtComplex::Infinity => write!(f, "inf"),
        }
    }
}

pub fn format_complex(z: Complex64) -> String {
    let re = clean(z.re);
    let im = clean(z.im);
    match (re == 0.0, im == 0.0) {
        (_, true) => format!("{re}"),
        (true, false) => format!("{im}i"),
        (false, false) if im < 0.0 => format!("{re}-{}i", -im),
        (false, false) => format!("{re}+{im}i"),
    }
}

fn clean(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

/// A cardinality in ℕ ∪ {∞}: nullity, defect, ascent, descent, multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Count {
    Finite(u64),
    Infinite,
}

impl Count {
    pub const ZERO: Count = Count::Finite(0);

    pub fn is_finite(&self) -> bool {
        matches!(self, Count::Finite(_))
    }

    pub fn is_zero(&self) -> bool {
        *self == Count::Finite(0)
    }
}

impl std::ops::Add for Count {
    type Output = Count;

    fn add(self, rhs: Count) -> Count {
        match (self, rhs) {
            (Count::Finite(a), Count::Finite(b)) => Count::Finite(a + b),
            _ => Count::Infinite,
        }
    }
}

impl PartialOrd for Count {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Count {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Count::Finite(a), Count::Finite(b)) => a.cmp(b),
            (Count::Finite(_), Count::Infinite) => Ordering::Less,
            (Count::Infinite, Count::Finite(_)) => Ordering::Greater,
            (Count::Infinite, Count::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Count::Finite(n) => write!(f, "{n}"),
            Count::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Count {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Count::Finite(n) => s.serialize_u64(*n),
            Count::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Count {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match &v {
            serde_json::Value::Number(n) => n
                .as_u64()
                .map(Count::Finite)
                .ok_or_else(|| de::Error::custom("multiplicity must be a nonnegative integer")),
            serde_json::Value::String(s) if is_infinity_token(s) => Ok(Count::Infinite),
            _ => Err(de::Error::custom("expected a nonnegative integer or \"inf\"")),
        }
    }
}

pub(crate) fn is_infinity_token(s: &str) -> bool {
    matches!(s.trim(), "inf" | "infinity" | "∞" | "Infinity")
}

/// Parses `"2"`, `"-1.5"`, `"i"`, `"-3i"`, `"1+2i"`, `"0.5-0.25i"`.
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    if let Some(body) = s.strip_suffix('i') {
        // split at the last sign that is not the leading one and not part of an exponent
        let bytes = body.as_bytes();
        let mut split = None;
        for idx in (1..bytes.len()).rev() {
            let c = bytes[idx] as char;
            if (c == '+' || c == '-') && !matches!(bytes[idx - 1] as char, 'e' | 'E') {
                split = Some(idx);
                break;
            }
        }
        let (re_part, im_part) = match split {
            Some(idx) => (&body[..idx], &body[idx..]),
            None => ("", body),
        };
        let im = match im_part {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => other.parse::<f64>().ok()?,
        };
        let re = if re_part.is_empty() {
            0.0
        } else {
            re_part.parse::<f64>().ok()?
        };
        Some(Complex64::new(re, im))
    } else {
        s.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0))
    }
}

/// Reads a complex number from JSON: a number, `[re, im]`, `{"re":..,"im":..}`
/// or a string such as `"1-2i"`.
pub fn complex_from_json(v: &serde_json::Value) -> Option<Complex64> {
    match v {
        serde_json::Value::Number(n) => n.as_f64().map(|x| Complex64::new(x, 0.0)),
        serde_json::Value::String(s) => parse_complex(s),
        serde_json::Value::Array(a) if a.len() == 2 => {
            Some(Complex64::new(a[0].as_f64()?, a[1].as_f64()?))
        }
        serde_json::Value::Object(o) => {
            let re = o.get("re").and_then(|x| x.as_f64()).unwrap_or(0.0);
            let im = o.get("im").and_then(|x| x.as_f64()).unwrap_or(0.0);
            if o.contains_key("re") || o.contains_key("im") {
                Some(Complex64::new(re, im))
            } else {
                None
            }
        }
        _ => None,
    }
}

pub fn complex_to_json(z: Complex64) -> serde_json::Value {
    serde_json::json!([clean(z.re), clean(z.im)])
}

pub fn ext_from_json(v: &serde_json::Value) -> Option<ExtComplex> {
    match v {
        serde_json::Value::String(s) if is_infinity_token(s) => Some(ExtComplex::Infinity),
        other => complex_from_json(other).map(ExtComplex::Finite),
    }
}

pub fn ext_to_json(z: ExtComplex) -> serde_json::Value {
    match z {
        ExtComplex::Finite(z) => complex_to_json(z),
        ExtComplex::Infinity => serde_json::Value::String("inf".into()),
    }
}

/// Serde adapter for `Complex64` fields using the `[re, im]` convention.
pub mod serde_complex {
    use super::*;

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        complex_to_json(*z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        complex_from_json(&v).ok_or_else(|| de::Error::custom("expected a complex number"))
    }
}

impl Serialize for ExtComplex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ext_to_json(*self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExtComplex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        ext_from_json(&v).ok_or_else(|| de::Error::custom("expected a complex number or \"inf\""))
    }
}
