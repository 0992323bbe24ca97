use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("violation: {0}")]
    Violation(String),
    #[error(transparent)]
    Core(#[from] paraproduct_core::Error),
}

impl HarnessError {
    /// 1 for violations, 2 for configuration and fit problems, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Violation(_) => 1,
            HarnessError::Config(_) | HarnessError::Fit(_) | HarnessError::Core(_) => 2,
            HarnessError::Io(_) => 3,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
