use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IntegrityError {
    #[error("unknown document `{0}`")]
    UnknownDocument(String),
}

/// A malformed line or cell in an input file.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{}line {line}{}: {message}", file_prefix(.file), column_suffix(.column))]
pub struct FormatError {
    pub file: Option<PathBuf>,
    /// 1-based line number, 0 when not tied to a line.
    pub line: usize,
    /// 1-based column (tab-separated field) number.
    pub column: Option<usize>,
    pub message: String,
}

fn file_prefix(file: &Option<PathBuf>) -> String {
    file.as_ref()
        .map(|p| format!("{}: ", p.display()))
        .unwrap_or_default()
}

fn column_suffix(column: &Option<usize>) -> String {
    column.map(|c| format!(", column {c}")).unwrap_or_default()
}

impl FormatError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        FormatError {
            file: None,
            line,
            column: None,
            message: message.into(),
        }
    }

    pub fn at_column(mut self, column: usize) -> Self {
        self.column = Some(column);
        self
    }

    pub fn in_file(mut self, file: impl Into<PathBuf>) -> Self {
        self.file = Some(file.into());
        self
    }
}

/// A relation that cannot be placed on the token stream.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("relation {ordinal} (doc `{doc_id}`): {message}")]
pub struct AlignmentError {
    pub ordinal: usize,
    pub doc_id: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error("manifest: {0}")]
    Manifest(String),
}

/// A DEQL syntax or pattern-resolution error. `position` is a byte offset
/// into the query string.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{message} (at position {position})")]
pub struct DeqlError {
    pub position: usize,
    pub message: String,
}

impl DeqlError {
    pub fn new(position: usize, message: impl Into<String>) -> Self {
        DeqlError {
            position,
            message: message.into(),
        }
    }
}

/// A filter value that does not occur in the dataset inventories.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("invalid {filter} value `{value}`; allowed: {}", allowed.join(", "))]
pub struct ValidationError {
    pub filter: String,
    pub value: String,
    pub allowed: Vec<String>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("query parse error: {0}")]
    Parse(#[from] DeqlError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}
