use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] qatune_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("missing artifact {}", .0.display())]
    Missing(PathBuf),
    #[error("{} was written under config {found}, current config is {expected}", path.display())]
    HashMismatch { path: PathBuf, expected: String, found: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Stable identifier for the machine-readable error line.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Core(_) => "core",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
            Error::Csv { .. } => "csv",
            Error::Missing(_) => "missing_artifact",
            Error::HashMismatch { .. } => "config_hash_mismatch",
            Error::Config(_) => "config",
        }
    }
}
