use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] ehsa_core::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("bad data in {path}: {detail}")]
    Data { path: PathBuf, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 config, 3 data, 4 identifiability, 5 tuning,
    /// 6 divergence, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        use ehsa_core::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::Data { .. } => 3,
            Self::Io { .. } => 1,
            Self::Core(e) => match e {
                E::Config(_) | E::ModelConfig(_) | E::InvalidInput(_) => 2,
                E::InsufficientData(_) | E::MetricUndefined(_) => 3,
                E::Identifiability { .. } | E::AllCandidatesFailed(_) => 4,
                E::Tuning(_) => 5,
                E::Divergence { .. } => 6,
                E::Analysis(_) => 1,
            },
        }
    }
}
