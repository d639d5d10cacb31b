use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The local gramian of the cover centered at `center` could not be
    /// factorized, or its condition estimate exceeded the allowed bound.
    #[error("singular local gramian at node {center} (condition estimate {condition:e})")]
    SingularGramian { center: usize, condition: f64 },

    #[error("global solve failed: {0}")]
    SolveFailure(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
