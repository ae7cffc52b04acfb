//! Input files. Every failure here is an [`InputError`] and maps to exit code 2.

use std::fs;
use std::path::Path;

use indax_core::model::{Signature, Structure, Theory, TheoryFileError};
use indax_core::setfam::SetFamily;

#[derive(Debug, thiserror::Error)]
#[error("{path}: {message}")]
pub struct InputError {
    pub path: String,
    pub message: String,
}

impl InputError {
    pub fn new(path: &Path, message: impl Into<String>) -> Self {
        Self {
            path: path.display().to_string(),
            message: message.into(),
        }
    }
}

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError::new(path, e.to_string()))
}

fn json_position(e: &serde_json::Error) -> String {
    format!("{}:{}: {e}", e.line(), e.column())
}

/// A theory file: a JSON array of closed sentences.
pub fn theory(path: &Path) -> Result<Theory, InputError> {
    let text = read(path)?;
    if let Err(e) = serde_json::from_str::<Vec<String>>(&text) {
        return Err(InputError::new(path, format!("not a JSON array of strings at {}", json_position(&e))));
    }
    let t = Theory::from_json(&text).map_err(|e| match e {
        TheoryFileError::Sentence { index, error } => InputError::new(path, format!("sentence {index} at {error}")),
        other => InputError::new(path, other.to_string()),
    })?;
    for (i, s) in t.sentences().enumerate() {
        if let Some(v) = s.free_vars().into_iter().next() {
            return Err(InputError::new(path, format!("sentence {i} has free variable `{v}`")));
        }
    }
    Ok(t)
}

pub fn structure(path: &Path) -> Result<Structure, InputError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| InputError::new(path, json_position(&e)))
}

pub fn family(path: &Path) -> Result<SetFamily, InputError> {
    let text = read(path)?;
    if let Err(e) = serde_json::from_str::<serde_json::Value>(&text) {
        return Err(InputError::new(path, json_position(&e)));
    }
    SetFamily::from_json(&text).map_err(|e| InputError::new(path, e.to_string()))
}

/// The signature of every relation used across `theories`, in name order.
pub fn signature(theories: &[(&Path, &Theory)]) -> Result<Signature, InputError> {
    let all = theories.iter().flat_map(|(_, t)| t.sentences());
    Signature::infer(all).map_err(|e| {
        let path = theories.first().map_or(Path::new("<input>"), |(p, _)| p);
        InputError::new(path, e.to_string())
    })
}
