use thiserror::Error;

/// Failures raised anywhere in the build-assemble-integrate pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("solve error: {0}")]
    Solve(String),
    #[error("stability error: {0}")]
    Stability(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("convergence error: {0}")]
    Convergence(String),
    #[error("non-finite state at step {step}: {what}")]
    NonFinite { step: usize, what: String },
    #[error("compatibility error: {0}")]
    Compatibility(String),
    #[error("forcing error: {0}")]
    Forcing(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 input error, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Geometry(_)
            | Error::Mesh(_)
            | Error::Config(_)
            | Error::Parse(_)
            | Error::Forcing(_)
            | Error::Compatibility(_)
            | Error::Stability(_)
            | Error::Io(_) => 2,
            Error::AtStep { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
