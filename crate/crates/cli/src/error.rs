use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] etlab_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const JOB_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const CAPACITY: i32 = 3;
    pub const CERTIFICATE: i32 = 4;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Core(etlab_core::Error::Capacity { .. }) => exit::CAPACITY,
            CliError::Core(e) if e.is_certificate_failure() => exit::CERTIFICATE,
            _ => exit::JOB_FAILED,
        }
    }
}
