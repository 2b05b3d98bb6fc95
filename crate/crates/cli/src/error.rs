use facebench_core::Error as CoreError;
use thiserror::Error;

/// A failure with the process exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    BadArguments(String),
    #[error("{0}")]
    ModelLoad(String),
    #[error("{0}")]
    ImageRead(String),
    #[error("{0}")]
    EmptySamples(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::BadArguments(_) => 2,
            CliError::ModelLoad(_) => 3,
            CliError::ImageRead(_) => 4,
            CliError::EmptySamples(_) => 5,
        }
    }

    /// Classifies a library error raised while loading models.
    pub fn model(e: CoreError) -> Self {
        match e {
            CoreError::EmptySamples(m) => CliError::EmptySamples(m),
            CoreError::InvalidArgument(m) => CliError::BadArguments(m),
            e => CliError::ModelLoad(e.to_string()),
        }
    }

    /// Classifies a library error raised while reading images.
    pub fn image(e: CoreError) -> Self {
        match e {
            CoreError::InvalidArgument(m) => CliError::BadArguments(m),
            e => CliError::ImageRead(e.to_string()),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::EmptySamples(m) => CliError::EmptySamples(m),
            CoreError::CascadeParse { .. } | CoreError::WeightLoad(_) | CoreError::Shape { .. } => {
                CliError::ModelLoad(e.to_string())
            }
            CoreError::ImageDecode(m) => CliError::ImageRead(m),
            e => CliError::BadArguments(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
