use thiserror::Error;

/// Errors surfaced by the pipeline and its modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    MalformedDocument(String),

    #[error("bad span [{start}, {end}): {problem}")]
    OffsetError {
        start: usize,
        end: usize,
        problem: String,
    },

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error("{capability} backend unavailable: {message}")]
    BackendUnavailable {
        capability: String,
        message: String,
    },

    #[error("model returned an empty generation")]
    EmptyGeneration,

    #[error("turn {turn} has no rationale index")]
    MissingRationale { turn: usize },

    #[error("unknown context id '{0}'")]
    UnknownContext(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error("embedder unavailable: {0}")]
    EmbedderUnavailable(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("invalid json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
