use std::path::PathBuf;

use fuzzeval_core::campaign::{CampaignResult, TrialKey};

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] fuzzeval_core::Error),
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON in {}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("trial {cell} failed: {source}")]
    Trial {
        cell: TrialKey,
        #[source]
        source: fuzzeval_core::Error,
        /// Trials that completed before the campaign stopped.
        partial: Box<CampaignResult>,
    },
}

impl HarnessError {
    /// Whether the error stems from bad user input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        use fuzzeval_core::Error as E;
        match self {
            HarnessError::Core(e) => matches!(e, E::InvalidArgument(_) | E::Config(_) | E::StrategyUnavailable(_)),
            HarnessError::Read { .. } | HarnessError::Json { .. } => true,
            HarnessError::Write { .. } | HarnessError::Trial { .. } => false,
        }
    }

    pub(crate) fn read(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Read {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn write(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Write {
            path: path.into(),
            source,
        }
    }
}
