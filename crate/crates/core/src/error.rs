use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is missing or out of its admissible range.
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    /// An operation argument violates its precondition.
    #[error("invalid parameter `{name}`: {message}")]
    Parameter { name: &'static str, message: String },

    /// Structured input could not be decoded.
    #[error("parse error in {source_name}{}: {message}", field.as_ref().map(|f| format!(" (field `{f}`)")).unwrap_or_default())]
    Parse {
        source_name: String,
        field: Option<String>,
        message: String,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn parameter(name: &'static str, message: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Builds a parse error from a serde_json failure, recovering the field
    /// name when serde reports one.
    pub fn from_json(source_name: impl Into<String>, err: &serde_json::Error) -> Self {
        let message = err.to_string();
        Error::Parse {
            source_name: source_name.into(),
            field: field_from_serde_message(&message),
            message,
        }
    }
}

fn field_from_serde_message(message: &str) -> Option<String> {
    // serde reports e.g. "missing field `scope`" / "unknown field `foo`"
    // / "invalid value ... for field `x`" with the name in backticks.
    for marker in ["missing field `", "unknown field `", "duplicate field `", "field `"] {
        if let Some(start) = message.find(marker) {
            let rest = &message[start + marker.len()..];
            if let Some(end) = rest.find('`') {
                return Some(rest[..end].to_string());
            }
        }
    }
    None
}
