use std::path::PathBuf;

use thiserror::Error;

/// Problems with what the user asked for: exit status 2.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InputError {
    #[error("cannot read {}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("{}`{field}`: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Field {
        field: String,
        line: Option<usize>,
        message: String,
    },

    #[error("{0}")]
    Incompatible(String),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Input(#[from] InputError),

    /// A solver or check failed; artifacts written so far are kept.
    #[error("{0}")]
    Solver(String),

    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Input(_) => 2,
            RunError::Solver(_) | RunError::Output { .. } => 1,
        }
    }
}
