use ratchet_core::RatchetError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{location}: {message}")]
    Config { location: String, message: String },
    #[error("solver failure: {0}")]
    Solver(#[from] RatchetError),
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
    #[error("{failed} of {total} acceptance criteria failed")]
    Acceptance { failed: usize, total: usize },
}

impl CliError {
    /// 1 for configuration problems, 2 for solver and output failures, 3 for
    /// failed acceptance checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 1,
            CliError::Solver(_) | CliError::Output { .. } => 2,
            CliError::Acceptance { .. } => 3,
        }
    }
}
