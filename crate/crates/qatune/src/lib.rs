//! Experiment pipeline around `qatune-core`: configuration, JSON artifacts,
//! atomic file output, parallel evaluation and the command-line steps.

pub mod config;
pub mod error;
pub mod formats;
pub mod io;
pub mod parallel;
pub mod pipeline;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use pipeline::{Method, Pipeline};
