use thiserror::Error;

/// Failures shared by every module of the crate.
///
/// Check violations are not errors: they are collected into a
/// [`ValidationReport`](crate::report::ValidationReport). An `Error` means the
/// operation could not be carried out at all.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or mismatched input (shapes, lengths, parse failures).
    #[error("input error: {0}")]
    Input(String),
    /// A precondition of the operation does not hold for well-formed input.
    #[error("domain error: {0}")]
    Domain(String),
    /// A finite category, functor, diagram or cone is not structurally complete.
    #[error("structural error: {0}")]
    Structural(String),
    /// A size guard was exceeded; nothing was computed.
    #[error("refused: {what} has size {size}, bound is {bound}")]
    Refused { what: String, size: u128, bound: u128 },
    /// A numerical routine produced data that contradicts its own invariants.
    #[error("internal consistency error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }
}
