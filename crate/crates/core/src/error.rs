use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("unsupported document version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("test {test}: coverage has length {found}, expected {expected}")]
    CoverageLength {
        test: usize,
        found: usize,
        expected: usize,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("test {0} is already in the suite")]
    AlreadyInSuite(usize),

    #[error("unknown test id {0}")]
    UnknownTest(usize),

    #[error("no failing test in the scored subset")]
    NoFailingTest,

    #[error("empty coverage matrix")]
    EmptyMatrix,

    #[error("no buggy element maps to a ranked method")]
    NoRankedFault,

    #[error("insufficient candidates: need {needed}, have {available}")]
    InsufficientCandidates { needed: usize, available: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("training diverged: non-finite loss at global step {0}")]
    Diverged(usize),

    #[error("benchmark generation gave up after {0} retries without a failing test")]
    RetriesExhausted(usize),

    #[error("fault {index}: {source}")]
    Fault { index: usize, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
