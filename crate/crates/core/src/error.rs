//! Error types shared across the crate.

use alloc::string::String;

/// Lexing failure. Offsets are byte positions into the input.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexError {
    #[error("unterminated string literal starting at byte {offset}")]
    UnterminatedString { offset: usize },
    #[error("unterminated character literal starting at byte {offset}")]
    UnterminatedChar { offset: usize },
    #[error("unterminated block comment starting at byte {offset}")]
    UnterminatedComment { offset: usize },
}

/// Parsing failure with the byte offset where the parser gave up.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(offset: usize, message: impl Into<String>) -> Self {
        ParseError {
            offset,
            message: message.into(),
        }
    }
}

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    /// An API catalog line that does not follow the `prefix`/`type` format.
    #[error("catalog line {line}: {message}")]
    Catalog { line: usize, message: String },
    /// A precondition or internal invariant was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },
}

impl Error {
    pub fn contract(message: impl Into<String>) -> Self {
        Error::Contract(message.into())
    }
}
