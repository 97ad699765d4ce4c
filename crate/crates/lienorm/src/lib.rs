//! File formats, run configuration, caching and the command pipeline around
//! `lienorm-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod report;
pub mod store;

pub use config::{Model, RunConfig};
pub use error::CliError;
pub use report::{Emit, Report};
