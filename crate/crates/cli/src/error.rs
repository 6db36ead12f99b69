use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Exit code for a failed analysis (axiom violation, failed expectation, nonlinear input).
pub const EXIT_ANALYSIS: u8 = 1;
/// Exit code for unreadable or malformed input.
pub const EXIT_INPUT: u8 = 2;
/// Exit code for an optimizer that stopped at its iteration budget under `--strict`.
pub const EXIT_NOT_CONVERGED: u8 = 3;

/// Everything that can go wrong in a command.
#[derive(Debug, Error)]
pub enum CliError {
    /// A file could not be read.
    #[error("cannot read `{}`: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    /// A file could not be written.
    #[error("cannot write `{}`: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
    /// A sheaf spec is not valid JSON or does not match the schema.
    #[error("invalid sheaf spec `{}`: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    /// A CSV file could not be parsed.
    #[error("invalid CSV `{}`: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    /// Well-formed input with invalid content.
    #[error("{context}: {message}")]
    Invalid { context: String, message: String },
    /// Rejected by the library.
    #[error(transparent)]
    Core(#[from] sheaf_core::Error),
    /// Writing the report failed.
    #[error("cannot write report: {0}")]
    Output(#[from] io::Error),
}

impl CliError {
    pub(crate) fn invalid(context: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Invalid { context: context.into(), message: message.into() }
    }

    /// Process exit code for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(sheaf_core::Error::NonlinearSheaf) => EXIT_ANALYSIS,
            _ => EXIT_INPUT,
        }
    }
}

/// Result alias for command code.
pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_separate_analysis_from_input() {
        assert_eq!(CliError::Core(sheaf_core::Error::NonlinearSheaf).exit_code(), EXIT_ANALYSIS);
        assert_eq!(CliError::invalid("x", "y").exit_code(), EXIT_INPUT);
        let io = CliError::Read { path: "a.json".into(), source: io::Error::new(io::ErrorKind::NotFound, "gone") };
        assert_eq!(io.exit_code(), EXIT_INPUT);
        assert_eq!(io.to_string(), "cannot read `a.json`: gone");
    }
}
