use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("cyclotomic context mismatch: k={0} vs k={1}")]
    ContextMismatch(u32, u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("ord is undefined for the zero operator")]
    UndefinedOrd,
    #[error("truncation: {0}")]
    Truncation(String),
    #[error("not an HCP within the given bounds: {0}")]
    NotHcp(String),
    #[error("property violation: {0}")]
    PropertyViolation(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } => 2,
            Error::Precondition(_) | Error::ContextMismatch(..) | Error::DivisionByZero | Error::UndefinedOrd => 3,
            Error::Truncation(_) | Error::NotHcp(_) => 4,
            Error::PropertyViolation(_) => 5,
            Error::Internal(_) | Error::Io(_) | Error::Json(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Precondition(_) => "precondition",
            Error::ContextMismatch(..) => "context",
            Error::DivisionByZero => "division-by-zero",
            Error::UndefinedOrd => "undefined-ord",
            Error::Truncation(_) => "truncation",
            Error::NotHcp(_) => "not-hcp",
            Error::PropertyViolation(_) => "property-violation",
            Error::Internal(_) => "internal",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exitCode": self.exit_code(),
        });
        if let Error::Parse { line, col, .. } = self {
            v["line"] = (*line).into();
            v["col"] = (*col).into();
        }
        v
    }
}

pub(crate) fn trunc<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Truncation(msg.into()))
}

pub(crate) fn pre<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
