//! Config-driven experiments on top of `qcool`.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{Experiment, RunConfig};
pub use error::CliError;
pub use output::{format_float, Table};
pub use run::run;
