use thiserror::Error;

#[derive(Debug, Error)]
pub enum VlmError {
    #[error("tsne_knn mode needs a neighbor set")]
    MissingNeighbors,
    #[error("image is {bytes} bytes, above the {max} byte cap")]
    ImageTooLarge { bytes: usize, max: usize },
    #[error("invalid endpoint config: {0}")]
    Config(String),
    #[error("authentication failed (HTTP {status})")]
    Auth { status: u16 },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
}

impl VlmError {
    /// Whether the failure came from the endpoint rather than local input.
    pub fn is_endpoint_failure(&self) -> bool {
        !matches!(
            self,
            VlmError::MissingNeighbors | VlmError::ImageTooLarge { .. } | VlmError::Config(_)
        )
    }
}
