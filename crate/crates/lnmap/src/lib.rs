//! Command line toolkit around [`lnmap_core`]: text file formats, model
//! and checkpoint persistence, run directories, synthetic benchmark
//! generators and the subcommand implementations behind the `lnmap` binary.

pub mod commands;
pub mod config;
pub mod embio;
pub mod persist;
pub mod report;
pub mod rundir;
pub mod synth;

/// Process-level failure classes, each mapped onto one exit code.
///
/// The inner strings are full messages: by the time an error crosses a
/// command boundary it has already been annotated with the file path or
/// flag it concerns.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Exit 2: unusable flags, missing or malformed input files.
    #[error("{0}")]
    Input(String),

    /// Exit 3: training or decomposition failed numerically.
    #[error("{0}")]
    Numeric(String),

    /// Exit 4: states that indicate a bug rather than bad input.
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    /// Builds an input error from anything displayable.
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    /// Annotates an IO failure with the path it concerns.
    pub fn file(path: &std::path::Path, err: std::io::Error) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }

    /// The process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<lnmap_core::Error> for CliError {
    fn from(err: lnmap_core::Error) -> Self {
        match err {
            lnmap_core::Error::NonFinite { .. } | lnmap_core::Error::NoConvergence { .. } => {
                CliError::Numeric(err.to_string())
            }
            _ => CliError::Input(err.to_string()),
        }
    }
}

/// Result alias for everything in this crate.
pub type Result<T> = std::result::Result<T, CliError>;
