use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// Configuration problems, one message per violation.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error(transparent)]
    Core(#[from] condist_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimError {
    pub fn is_config(&self) -> bool {
        matches!(self, SimError::Config(_))
    }
}
