//! Batch front-end: JSON run configurations and the artifact pipeline behind
//! the `qnm` binary.

pub mod config;
pub mod pipeline;

pub use config::RunConfig;
pub use pipeline::{Pipeline, Report, Stage};
