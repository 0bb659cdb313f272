use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in {field}: {message}")]
    Config { field: String, message: String },

    #[error("solver failure: {0}")]
    Solver(fairalloc::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { field: field.into(), message: message.into() }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }

    /// 2 for bad input, 3 for solver failures, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Solver(_) => 3,
            CliError::Io { .. } | CliError::Csv(_) => 1,
        }
    }
}

impl From<fairalloc::Error> for CliError {
    fn from(e: fairalloc::Error) -> Self {
        use fairalloc::Error as E;
        match e {
            E::InvalidWelfareParam(m) => CliError::config("q", m),
            E::InvalidDistribution(m) => CliError::config("dist", m),
            E::InvalidArgument(m) | E::InvalidUtilities(m) | E::DimensionMismatch(m) => {
                CliError::config("arguments", m)
            }
            other => CliError::Solver(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
