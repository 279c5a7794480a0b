use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DATA: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Core(#[from] portrayal::Error),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use portrayal::Error as E;
        match self {
            CliError::Config(_) | CliError::Core(E::Config(_)) => EXIT_CONFIG,
            CliError::Io { .. } | CliError::Core(E::Io { .. }) => EXIT_IO,
            CliError::Core(E::EndpointUnreachable(_)) => EXIT_IO,
            CliError::Core(_) => EXIT_DATA,
        }
    }
}
