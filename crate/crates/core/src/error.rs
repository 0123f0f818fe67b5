use thiserror::Error;

/// Errors raised by the library. The CLI maps each variant onto an exit code.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix or vector shapes do not line up.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// An exhaustive search or dense solve would exceed the configured bound.
    #[error("guard refused: {what} needs {needed}, limit is {limit} (raise BREUILKIT_GUARD)")]
    Guard { what: &'static str, needed: u128, limit: u128 },

    /// A result that must exist by theory was not found.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// The tower does not carry the data this operation needs.
    #[error("unsupported tower: {0}")]
    UnsupportedTower(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

/// Default bound on exhaustive search spaces and dense unknown counts.
pub const DEFAULT_GUARD: u128 = 10_000_000;

/// Reads `BREUILKIT_GUARD`, falling back to `default`. The environment can only raise a bound.
pub fn guard_limit(default: u128) -> u128 {
    std::env::var("BREUILKIT_GUARD")
        .ok()
        .and_then(|s| s.trim().parse::<u128>().ok())
        .map_or(default, |v| v.max(default))
}

pub(crate) fn check_guard(what: &'static str, needed: u128, default: u128) -> Result<()> {
    let limit = guard_limit(default);
    if needed > limit {
        Err(Error::Guard { what, needed, limit })
    } else {
        Ok(())
    }
}
