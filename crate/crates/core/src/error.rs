use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("invalid axis index {0} (expected 0, 1 or 2)")]
    InvalidAxisIndex(i64),
    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("cycle detected in kinematic tree at part {0}")]
    CycleDetected(usize),
    #[error("state length mismatch: expected {expected}, got {got}")]
    StateLengthMismatch { expected: usize, got: usize },
    #[error("invalid kinematic tree: {0}")]
    InvalidTree(String),

    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown part {0}")]
    UnknownPart(String),
    #[error("dialect mismatch at line {line}: expected {expected}, found {found}")]
    DialectMismatch {
        line: usize,
        expected: &'static str,
        found: &'static str,
    },

    #[error("unsupported joint type `{kind}` on joint `{joint}`")]
    UnsupportedJoint { joint: String, kind: String },
    #[error("unresolved link `{0}`")]
    UnresolvedLink(String),
    #[error("missing mesh `{0}`")]
    MissingMesh(String),

    #[error("mesh is not watertight ({open_edges} open edges)")]
    NotWatertight { open_edges: usize },
    #[error("field never crosses the iso level")]
    NoSurface,
    #[error("malformed external grid: {0}")]
    ExternalFormat(String),

    #[error("point is behind the camera")]
    BehindCamera,
    #[error("invalid prompt pixel ({0}, {1}): no valid 3D point")]
    InvalidPrompt(usize, usize),

    #[error("joint is revolute but has no pivot")]
    MissingPivot,

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Variant name, for diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyInput(_) => "EmptyInput",
            Error::DegenerateGeometry(_) => "DegenerateGeometry",
            Error::InvalidAxisIndex(_) => "InvalidAxisIndex",
            Error::InvalidValue(_) => "InvalidValue",
            Error::CycleDetected(_) => "CycleDetected",
            Error::StateLengthMismatch { .. } => "StateLengthMismatch",
            Error::InvalidTree(_) => "InvalidTree",
            Error::Syntax { .. } => "SyntaxError",
            Error::UnknownPart(_) => "UnknownPart",
            Error::DialectMismatch { .. } => "DialectMismatch",
            Error::UnsupportedJoint { .. } => "UnsupportedJoint",
            Error::UnresolvedLink(_) => "UnresolvedLink",
            Error::MissingMesh(_) => "MissingMesh",
            Error::NotWatertight { .. } => "NotWatertight",
            Error::NoSurface => "NoSurface",
            Error::ExternalFormat(_) => "ExternalFormat",
            Error::BehindCamera => "BehindCamera",
            Error::InvalidPrompt(..) => "InvalidPrompt",
            Error::MissingPivot => "MissingPivot",
            Error::Format { .. } => "FormatError",
            Error::Io { .. } => "IoError",
        }
    }

    pub(crate) fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
