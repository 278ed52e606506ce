//! Configuration, initial data, experiment drivers and file output.

pub mod config;
pub mod experiments;
pub mod init;
pub mod metrics;
pub mod output;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::diagnostics::DiagnosticsError;
use crate::grid::GridError;
use crate::schemes::SchemeError;

pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("refinement level {level}: {source}")]
    Level {
        level: u32,
        #[source]
        source: Box<HarnessError>,
    },
    #[error("non-finite diagnostics at step {0}")]
    NonFinite(usize),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
