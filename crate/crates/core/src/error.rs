use std::io;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration (key sizes, widths, dataset parameters).
    #[error("config error: {0}")]
    Config(String),

    /// The peer sent something that violates the protocol.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// Input lists for linkage were not deduplicated and ascending.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A frame could not be parsed.
    #[error("framing error: {0}")]
    Framing(String),

    /// The session was aborted, either locally or by the peer.
    #[error("session aborted: {0}")]
    Aborted(String),

    #[error("timed out waiting for peer")]
    Timeout,

    #[error("channel closed by peer")]
    Closed,

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable kind, used for CLI error reports and FFI codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Protocol(_) => "protocol",
            Error::Precondition(_) => "precondition",
            Error::Framing(_) => "framing",
            Error::Aborted(_) => "aborted",
            Error::Timeout => "timeout",
            Error::Closed => "closed",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
