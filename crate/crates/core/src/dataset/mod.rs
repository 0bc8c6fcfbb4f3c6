//! Benchmark ingestion: native WikiTQ and TabFact layouts, plus the
//! normalized JSONL interchange format.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::table::TableError;

pub mod interchange;
pub mod tabfact;
pub mod wikitq;

pub use interchange::{read_interchange, write_interchange};
pub use tabfact::{load_tabfact, TabFactSplit};
pub use wikitq::{load_wikitq, WikiTqSplit};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing file: {}", .0.display())]
    Missing(PathBuf),
    #[error("{}:{line}: {msg}", path.display())]
    Malformed {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("statement references missing table '{0}'")]
    MissingTable(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl DatasetError {
    pub(crate) fn malformed(path: &Path, line: usize, msg: impl Into<String>) -> Self {
        DatasetError::Malformed {
            path: path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn table(path: &Path, line: usize, err: TableError) -> Self {
        Self::malformed(path, line, err.to_string())
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, DatasetError> {
    if !path.exists() {
        return Err(DatasetError::Missing(path.to_path_buf()));
    }
    std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}
