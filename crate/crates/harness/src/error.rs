use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] odm_core::Error),

    #[error("config {}: {detail}", path.display())]
    Config { path: PathBuf, detail: String },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    /// `row` counts data rows from 1, excluding the header.
    #[error("{}: row {row}: {detail}", path.display())]
    Csv { path: PathBuf, row: usize, detail: String },
}

impl HarnessError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io { path: path.to_owned(), source }
    }
}
