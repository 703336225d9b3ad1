use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid horizon {0}: must be finite and > 0")]
    InvalidHorizon(f64),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid fold count k={k} for {n} items")]
    InvalidK { k: usize, n: usize },

    #[error("validation failed{}{}: {reason}", context_suffix(.context), index_suffix(.index))]
    Validation {
        context: String,
        index: Option<usize>,
        reason: String,
    },

    #[error("incomplete meta-dataset: missing curve for dataset '{dataset}', algorithm {algo}")]
    Incomplete { dataset: String, algo: String },

    #[error("I/O error at {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {}: {source}", .path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("protocol mismatch: expected {expected}, meta-dataset is {found}")]
    ProtocolMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("episode already finished")]
    EpisodeFinished,

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("agent '{0}' used before meta_train")]
    NotTrained(&'static str),

    #[error("cannot meta-train: {0}")]
    NotTrainable(String),

    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error("configuration error: {0}")]
    Config(String),
}

fn context_suffix(context: &str) -> String {
    if context.is_empty() {
        String::new()
    } else {
        format!(" in {context}")
    }
}

fn index_suffix(index: &Option<usize>) -> String {
    index.map(|i| format!(" at index {i}")).unwrap_or_default()
}

impl Error {
    pub(crate) fn validation(index: Option<usize>, reason: impl Into<String>) -> Self {
        Error::Validation {
            context: String::new(),
            index,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches a file (or other location) to a validation error raised deeper down.
    pub(crate) fn in_context(self, ctx: impl Into<String>) -> Self {
        match self {
            Error::Validation {
                context,
                index,
                reason,
            } if context.is_empty() => Error::Validation {
                context: ctx.into(),
                index,
                reason,
            },
            other => other,
        }
    }

    /// True for failures of the filesystem rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
