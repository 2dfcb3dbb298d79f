//! Shared plumbing for the JSON document formats.

use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::error::{Error, Result};

/// How tolerant a parser is of content it does not understand.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    /// Unknown keys or elements are errors.
    Strict,
    /// Unknown keys or elements are skipped and reported as warnings.
    #[default]
    Lenient,
}

/// A parsed value together with the non-fatal diagnostics produced on the way.
#[derive(Clone, Debug, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

impl<T> Parsed<T> {
    pub fn new(value: T) -> Self {
        Parsed {
            value,
            warnings: Vec::new(),
        }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Parsed<U> {
        Parsed {
            value: f(self.value),
            warnings: self.warnings,
        }
    }
}

/// Deserializes a JSON object, enforcing `known` as the set of accepted
/// top-level keys. Unknown keys are removed (lenient) or rejected (strict).
pub(crate) fn json_document<T: DeserializeOwned>(source: &str, known: &[&str], mode: Mode) -> Result<Parsed<T>> {
    let value: Value = serde_json::from_str(source).map_err(Error::from_json)?;
    let mut warnings = Vec::new();
    if let Value::Object(map) = &value {
        for key in map.keys().filter(|k| !known.contains(&k.as_str())) {
            if mode == Mode::Strict {
                return Err(Error::UnknownKey(key.clone()));
            }
            warnings.push(format!("ignoring unknown top-level key `{key}`"));
        }
    }
    // Typed pass over the source text so shape errors carry a position.
    let value = serde_json::from_str(source).map_err(Error::from_json)?;
    Ok(Parsed { value, warnings })
}
