//! Versioned JSON documents.
//!
//! Plans, adaptation models, model bundles and reports are written as
//! `{"format": "...", "version": N, "body": {...}}`. Floats use the shortest
//! round-trip representation, so reading a document back is lossless.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const DOC_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum DocError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("expected a `{expected}` document, found `{found}`")]
    WrongFormat { expected: String, found: String },
    #[error("unsupported document version {0} (this build reads version {DOC_VERSION})")]
    Version(u32),
}

/// Implemented by every type persisted as a versioned document.
pub trait Document: Serialize + DeserializeOwned {
    const FORMAT: &'static str;
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope<T> {
    format: String,
    version: u32,
    body: T,
}

pub fn to_json<T: Document>(value: &T) -> Result<String, DocError> {
    let env = Envelope { format: T::FORMAT.to_string(), version: DOC_VERSION, body: value };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: Document>(text: &str) -> Result<T, DocError> {
    let env: Envelope<serde_json::Value> = serde_json::from_str(text)?;
    if env.format != T::FORMAT {
        return Err(DocError::WrongFormat { expected: T::FORMAT.into(), found: env.format });
    }
    if env.version != DOC_VERSION {
        return Err(DocError::Version(env.version));
    }
    Ok(serde_json::from_value(env.body)?)
}

/// Writes a document atomically: a temporary sibling file is written first and
/// then renamed over `path`.
pub fn save<T: Document>(value: &T, path: &Path) -> Result<(), DocError> {
    write_atomic(path, to_json(value)?.as_bytes())
}

pub fn load<T: Document>(path: &Path) -> Result<T, DocError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| DocError::Io { path: path.display().to_string(), source })?;
    from_json(&text)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DocError> {
    let io_err = |source| DocError::Io { path: path.display().to_string(), source };
    let file_name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    std::fs::write(&tmp, bytes).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)
}
