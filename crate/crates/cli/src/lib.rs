//! Library surface of the batch CLI; the binary in `main.rs` is a thin
//! argument-parsing shell over these commands so integration tests can
//! drive them in-process.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod logging;
pub mod reports;

pub use artifacts::OutDir;
pub use config::{RunConfig, Task};
pub use logging::RunLog;
