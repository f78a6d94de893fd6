use std::path::Path;

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or configuration (exit 1).
    #[error("{0}")]
    Usage(String),
    /// Unreadable or malformed input, or an output that cannot be written (exit 2).
    #[error("{0}")]
    Input(String),
    /// A remote oracle or scorer could not be reached (exit 3).
    #[error("{0}")]
    Unavailable(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Unavailable(_) => 3,
        }
    }

    pub fn input(path: &Path, message: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{}: {message}", path.display()))
    }
}

impl From<captree::scorer::ScorerError> for CliError {
    fn from(err: captree::scorer::ScorerError) -> Self {
        use captree::scorer::ScorerError;
        match err {
            ScorerError::RemoteUnavailable(_) => CliError::Unavailable(err.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<captree::interp::InterpError> for CliError {
    fn from(err: captree::interp::InterpError) -> Self {
        match err {
            captree::interp::InterpError::Scorer(inner) => inner.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<captree::analysis::AnalysisError> for CliError {
    fn from(err: captree::analysis::AnalysisError) -> Self {
        match err {
            captree::analysis::AnalysisError::Scorer(inner) => inner.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<captree::negatives::NegativeError> for CliError {
    fn from(err: captree::negatives::NegativeError) -> Self {
        use captree::negatives::NegativeError;
        match err {
            NegativeError::OracleUnavailable(_) => CliError::Unavailable(err.to_string()),
            NegativeError::MissingOracle(_) => CliError::Usage(err.to_string()),
        }
    }
}
