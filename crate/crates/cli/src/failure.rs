use std::fmt;

/// Why a command stopped; selects the exit code.
#[derive(Debug)]
pub enum Failure {
    /// A gated check failed (exit 1).
    Verification(String),
    /// Bad flags, config or parameters, or an unwritable output (exit 2).
    Invalid(String),
}

impl Failure {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Failure::Invalid(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Invalid(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Verification(m) => write!(f, "verification failed: {m}"),
            Failure::Invalid(m) => write!(f, "invalid input: {m}"),
        }
    }
}

impl From<fkobs::Error> for Failure {
    fn from(e: fkobs::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Invalid(format!("json: {e}"))
    }
}
