//! Canonical JSON: sorted keys, shortest round-trip floats, SHA-256 digests.

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::DocumentError;

/// Serialize through `serde_json::Value` so object keys come out sorted.
pub fn to_value<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("simulation types always serialize")
}

/// Single-line canonical form.
pub fn to_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(&to_value(value)).expect("value serializes")
}

/// Pretty canonical form with a trailing newline.
pub fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(&to_value(value)).expect("value serializes");
    s.push('\n');
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Deserialize, classifying failures into syntax vs schema errors with the
/// offending field path.
pub fn from_str<T: DeserializeOwned>(text: &str) -> Result<T, DocumentError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let result: Result<T, _> = serde_path_to_error::deserialize(&mut de);
    match result {
        Ok(v) => {
            de.end().map_err(|e| DocumentError::Syntax {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
            Ok(v)
        }
        Err(err) => {
            let path = err.path().to_string();
            let inner = err.into_inner();
            match inner.classify() {
                serde_json::error::Category::Data => Err(DocumentError::Schema {
                    path,
                    message: inner.to_string(),
                }),
                _ => Err(DocumentError::Syntax {
                    line: inner.line(),
                    column: inner.column(),
                    message: inner.to_string(),
                }),
            }
        }
    }
}

/// Serde helpers mapping non-finite distances to `null`.
pub mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
