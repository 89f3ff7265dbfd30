use std::path::PathBuf;

use crate::config::ConfigErrors;

/// Everything a lab run can fail with, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigErrors),
    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: kgz_core::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn numerical(context: impl Into<String>, source: kgz_core::Error) -> Self {
        Self::Numerical {
            context: context.into(),
            source,
        }
    }

    /// 0 success, 1 usage or configuration, 2 numerical failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config(_) => 1,
            Self::Numerical {
                source: kgz_core::Error::Config { .. },
                ..
            } => 1,
            Self::Numerical { .. } => 2,
            Self::Io { .. } | Self::Format { .. } => 3,
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;

/// Attaches a subcommand context to core errors.
pub(crate) trait Context<T> {
    fn context(self, what: &str) -> LabResult<T>;
}

impl<T> Context<T> for kgz_core::Result<T> {
    fn context(self, what: &str) -> LabResult<T> {
        self.map_err(|e| LabError::numerical(what, e))
    }
}
