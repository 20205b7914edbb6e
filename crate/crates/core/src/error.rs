use thiserror::Error;

/// Errors raised by the dyadic laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("resolution mismatch: {left} vs {right}")]
    ResolutionMismatch { left: u32, right: u32 },

    #[error("{what} = {value} exceeds the limit {limit} at this resolution")]
    ResolutionExceeded {
        what: &'static str,
        value: u64,
        limit: u64,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("budget exceeded for {what}: requires {required}, limit is {limit}")]
    Budget {
        what: &'static str,
        required: u128,
        limit: u128,
    },

    #[error("ordering mismatch: expected {expected}, found {found}")]
    OrderingMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("no B_{k} found below the search cap {cap}")]
    SearchCap { k: usize, cap: u64 },

    #[error("rejected counterexample schedule: {0}")]
    Schedule(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for budget violations (resource caps), as opposed to malformed input.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::Budget { .. } | Error::SearchCap { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
