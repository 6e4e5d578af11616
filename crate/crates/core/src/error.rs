use thiserror::Error;

/// Failure modes surfaced by the library.
///
/// `Parse` and `Validation` point at malformed input, down to the line
/// where possible. The remaining variants separate "the data cannot
/// support this computation" from "the algorithm failed to make
/// progress", which callers map to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("component selection failed: {0}")]
    Selection(String),

    #[error("cycle reached {achieved} s, short of the {target} s target window")]
    DurationShortfall { achieved: usize, target: u32 },

    #[error("histogram bins mismatch: {0}")]
    BinMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
