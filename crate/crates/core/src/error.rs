use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GifsError {
    #[error("enumeration of {} addresses exceeds the cap of {cap}", display_count(*.count))]
    CapExceeded { count: Option<u128>, cap: usize },

    #[error("address has depth {depth}; the operation needs depth >= {required}")]
    DepthTooSmall { depth: usize, required: usize },

    #[error("sub-address position {position} is out of range 1..={arity}")]
    PositionOutOfRange { position: usize, arity: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("symbol {symbol} is out of range for an index set of size {count}")]
    SymbolOutOfRange { symbol: u32, count: usize },

    #[error("invalid address string {input:?}: {reason}")]
    AddressSyntax { input: String, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("code function of depth {0} is not tabulated")]
    NotTabulated(usize),

    #[error("system specification error at {path}: {reason}")]
    Spec { path: String, reason: String },

    #[error("system specification parse error at line {line}, column {column}: {reason}")]
    SpecParse {
        line: usize,
        column: usize,
        reason: String,
    },
}

fn display_count(count: Option<u128>) -> String {
    match count {
        Some(n) => n.to_string(),
        None => "more than 2^128".to_string(),
    }
}

pub type Result<T, E = GifsError> = std::result::Result<T, E>;
