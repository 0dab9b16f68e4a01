use thiserror::Error;

use crate::csv_io::DataError;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(#[from] DataError),
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        source: sufcast_core::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("report is invalid: {0}")]
    Report(String),
}

impl AppError {
    /// Process exit status: 2 configuration, 3 data, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        use sufcast_core::Error as E;
        match self {
            AppError::Config(_) => 2,
            AppError::Data(_) | AppError::Write { .. } | AppError::Report(_) => 3,
            AppError::Stage { source, .. } => match source {
                E::InvalidArgument(_) | E::DimensionMismatch { .. } => 2,
                E::NonFinite { .. } => 3,
                _ => 4,
            },
        }
    }
}

/// Attach a stage name to a core error.
pub fn stage(stage: &'static str) -> impl FnOnce(sufcast_core::Error) -> AppError {
    move |source| AppError::Stage { stage, source }
}
