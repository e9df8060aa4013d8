use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },

    #[error("duplicate cve_id {0} in manifest")]
    DuplicateCve(String),

    #[error("invalid CVE id {0:?}")]
    InvalidCveId(String),

    #[error("{cve_id}: {message}")]
    InvalidRecord { cve_id: String, message: String },

    #[error("malformed diff at line {line}: {message}")]
    MalformedDiff { line: usize, message: String },

    #[error("missing {side} snapshot for {path}")]
    MissingSnapshot { path: String, side: &'static str },

    #[error("hunk application mismatch in {path}: {message}")]
    HunkMismatch { path: String, message: String },

    #[error("store layout collision at {0}")]
    LayoutCollision(PathBuf),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("unknown grammar {0:?}")]
    UnknownGrammar(String),

    #[error("grammar mismatch: {left} vs {right}")]
    GrammarMismatch { left: String, right: String },

    #[error("invalid mapping: {0}")]
    InvalidMapping(String),

    #[error("edit action {index}: {message}")]
    BadAction { index: usize, message: String },

    #[error("action site not found: {0}")]
    SiteNotFound(String),

    #[error("abstraction level mismatch: {0} vs {1}")]
    LevelMismatch(String, String),

    #[error("cannot parse canonical pattern at byte {offset}: {message}")]
    Canonical { offset: usize, message: String },

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("mixed CVE ids in graph input: expected {expected}, found {found}")]
    MixedCve { expected: String, found: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("negative interval: {from} is after {to}")]
    NegativeInterval { from: String, to: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
