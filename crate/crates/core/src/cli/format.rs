//! Number and vector encodings shared by scenario and report files.
//!
//! Reals are written as decimal strings with 17 significant digits, which
//! round-trips every finite `f64` exactly.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::numeric::{AffineSubspaceRep, Vector};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Accepts the 17-digit strings written by [`fmt_f64`] as well as plain
/// JSON numbers, so hand-written scenario files can use either.
pub fn parse_f64(value: &Value) -> Result<f64> {
    match value {
        Value::String(s) => s
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::input(format!("not a real number: {s:?}"))),
        Value::Number(n) => n.as_f64().ok_or_else(|| Error::input(format!("not a real number: {n}"))),
        other => Err(Error::input(format!("expected a real number, found {other}"))),
    }
}

pub fn scalar_json(x: f64) -> Value {
    Value::String(fmt_f64(x))
}

pub fn vector_json(v: &Vector) -> Value {
    Value::Array(v.iter().map(|x| scalar_json(*x)).collect())
}

pub fn subspace_json(s: &AffineSubspaceRep) -> Value {
    json!({
        "base": vector_json(s.base()),
        "basis": s.basis().iter().map(vector_json).collect::<Vec<_>>(),
    })
}

/// Serde adapter writing an `f64` as a 17-significant-digit string.
pub mod num {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};
    use serde_json::Value;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&super::fmt_f64(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        let v = Value::deserialize(d)?;
        super::parse_f64(&v).map_err(D::Error::custom)
    }
}

/// Serde adapter for `Vec<f64>` as a list of 17-digit strings.
pub mod num_vec {
    use serde::{de::Error as _, ser::SerializeSeq, Deserialize, Deserializer, Serializer};
    use serde_json::Value;

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&super::fmt_f64(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
        let items = Vec::<Value>::deserialize(d)?;
        items.iter().map(|v| super::parse_f64(v).map_err(D::Error::custom)).collect()
    }
}
