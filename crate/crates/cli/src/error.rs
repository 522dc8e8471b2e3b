use bectomo::TomoError;
use thiserror::Error;

/// Failure of a command, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("stage `{stage}` failed: {source}")]
    Numerical {
        stage: &'static str,
        #[source]
        source: TomoError,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) => 4,
        }
    }

    /// Attributes a library error to a pipeline stage; file and CSV
    /// failures stay I/O errors.
    pub fn at(stage: &'static str) -> impl FnOnce(TomoError) -> CliError {
        move |e| match e {
            TomoError::Io(e) => CliError::Io(format!("{stage}: {e}")),
            TomoError::Csv(e) => CliError::Io(format!("{stage}: {e}")),
            source => CliError::Numerical { stage, source },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
