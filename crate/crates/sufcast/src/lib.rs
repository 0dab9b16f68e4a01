//! IO, reports and the command-line driver for `sufcast-core`.

pub mod config;
pub mod csv_io;
pub mod error;
pub mod report;
pub mod run;

pub use error::AppError;
