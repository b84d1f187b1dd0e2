use serde::Serialize;

use crate::Mode;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("session {0} not found")]
    NotFound(String),
    #[error("invalid session configuration: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    InvalidRequest(String),
    #[error("uid {0} is not part of the current batch")]
    StaleUid(u64),
    #[error("session is closed")]
    Closed,
    #[error("operation needs a {expected:?} session, this one is {actual:?}")]
    WrongMode { expected: Mode, actual: Mode },
    #[error("storage error: {0}")]
    Storage(String),
    #[error("internal error: {0}")]
    Internal(String),
}

/// JSON error body.
#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::NotFound(_) => "not_found",
            SessionError::InvalidConfig(_) => "invalid_config",
            SessionError::InvalidRequest(_) => "invalid_request",
            SessionError::StaleUid(_) => "stale_uid",
            SessionError::Closed => "session_closed",
            SessionError::WrongMode { .. } => "wrong_mode",
            SessionError::Storage(_) => "storage_error",
            SessionError::Internal(_) => "internal_error",
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody { code: self.code(), message: self.to_string() }
    }
}

impl From<std::io::Error> for SessionError {
    fn from(e: std::io::Error) -> Self {
        SessionError::Storage(e.to_string())
    }
}
