use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn from_core(e: mrt_core::Error) -> Self {
        match e {
            mrt_core::Error::Io(io) => CliError::Io(io),
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            e => CliError::Usage(e.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}
