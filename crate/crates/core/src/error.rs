use std::path::PathBuf;

use crate::ontology::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown top-level key `{0}`")]
    UnknownKey(String),

    #[error("invalid ontology: {0}")]
    Ontology(Violation),

    #[error("unknown concept `{0}`")]
    UnknownConcept(String),

    #[error("unknown domain `{0}`")]
    UnknownDomain(String),

    #[error("unknown pedagogical object kind `{0}`")]
    UnknownPobKind(String),

    #[error("invalid time literal {0:?} (expected hh:mm:ss)")]
    InvalidTime(String),

    #[error("segments `{first}` and `{second}` overlap in lesson `{lesson}`")]
    OverlappingSegments {
        lesson: String,
        first: String,
        second: String,
    },

    #[error("segment `{segment}` in lesson `{lesson}`: {reason}")]
    InvalidSegment {
        lesson: String,
        segment: String,
        reason: String,
    },

    #[error("POB `{pob}` in segment `{segment}` concerns `{concept}`, which is not a concept of domain `{domain}`")]
    UnresolvedConcept {
        domain: String,
        segment: String,
        pob: String,
        concept: String,
    },

    #[error("duplicate {what} id `{id}`")]
    Duplicate { what: &'static str, id: String },

    #[error("malformed XML: {0}")]
    Xml(String),

    #[error("element `{0}` is outside the supported OWL subset")]
    UnsupportedElement(String),

    #[error("dangling reference `#{0}`")]
    DanglingReference(String),

    #[error("no course or domain element found")]
    NoOwlContent,

    #[error("nothing to index")]
    EmptyCorpus,

    #[error("index format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("index checksum mismatch (file truncated or corrupt)")]
    Checksum,

    #[error("corrupt index: {0}")]
    CorruptIndex(String),

    #[error("index does not match the corpus: {0}")]
    IndexMismatch(String),

    #[error("empty query")]
    EmptyQuery,

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("unknown segment ({lesson_id}, {segment_id})")]
    UnknownSegment { lesson_id: String, segment_id: String },

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn from_json(err: serde_json::Error) -> Self {
        Error::Syntax {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }

    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with file context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::File { source, .. } => source.root(),
            other => other,
        }
    }
}
