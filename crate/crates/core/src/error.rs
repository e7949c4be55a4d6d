use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("insufficient parameters: {requested} edits requested, {available} mutable parameters")]
    InsufficientParameters { requested: usize, available: usize },

    #[error("architecture does not belong to this search space: {0}")]
    SpaceMismatch(String),

    #[error("space too large for path enumeration ({0} paths)")]
    SpaceTooLarge(u128),

    #[error("path encoding required")]
    PathEncodingRequired,

    #[error("feature width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("training set too small: need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("rank-deficient design: factor `{0}` is confounded with `{1}`")]
    Confounded(String, String),

    #[error("invalid statistical input: {0}")]
    Statistics(String),

    #[error("bridge unavailable: {0}")]
    BridgeUnavailable(String),

    #[error("bridge protocol error: {message} (payload: {payload:?})")]
    Protocol { message: String, payload: String },

    #[error("bridge reported an error: {0}")]
    BridgeRemote(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("evaluation budgets differ across methods: {0}")]
    BudgetParity(String),

    #[error("missing artifacts in {dir}: expected {expected:?}")]
    MissingArtifacts { dir: String, expected: Vec<String> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of an external benchmark process.
    pub fn is_bridge(&self) -> bool {
        matches!(
            self,
            Error::BridgeUnavailable(_) | Error::Protocol { .. } | Error::BridgeRemote(_)
        )
    }
}
