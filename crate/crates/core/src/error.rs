use thiserror::Error;

use crate::lp::LpError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{what} is not column-stochastic: {detail}")]
    NotStochastic { what: String, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `A` has an all-zero row; the corresponding relay symbol can never be
    /// produced and must be pruned from the alphabet of `U`.
    #[error("row {row} of A is all zero; remove u-symbol {row} from the alphabet")]
    AlphabetReduction { row: usize },

    #[error("trace length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("symbol {symbol} at position {position} outside alphabet of size {alphabet}")]
    SymbolOutOfRange {
        position: usize,
        symbol: usize,
        alphabet: usize,
    },

    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("manipulability checks disagree: {0}")]
    Consistency(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

pub type Result<T> = std::result::Result<T, Error>;
