//! File formats, configuration, reports, calibration and the acceptance
//! suite built on `hsbmo-core`.

pub mod calibration;
pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod report;
pub mod tolerances;
pub mod verify;

pub use error::{CliError, CliResult};
