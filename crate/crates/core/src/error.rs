use thiserror::Error;

pub type Result<T, E = ForgeError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ForgeError {
    /// Bad input: size mismatch, invalid index, malformed word.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A dense or enumeration limit would be exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// A numerical invariant broke (norm loss, non-Hermitian residue).
    #[error("internal error: {0}")]
    Internal(String),

    #[error("partition validation failed: {0}")]
    Validation(String),

    #[error("operator decomposition failed: {0}")]
    Decomposition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("training diverged at epoch {epoch}: {reason}")]
    Training {
        epoch: usize,
        reason: String,
        /// Parameters from the last epoch with a finite energy.
        last_valid: Box<crate::trainer::Checkpoint>,
    },

    #[error("checkpoint format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ForgeError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        ForgeError::Argument(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        ForgeError::Resource(msg.into())
    }

    pub(crate) fn internal(msg: impl Into<String>) -> Self {
        ForgeError::Internal(msg.into())
    }
}
