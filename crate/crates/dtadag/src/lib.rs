//! File formats and the command-line front end for `dtadag-core`.
//!
//! * [`scenario_file`]: scenario and network JSON documents;
//! * [`tabular`]: dataset and pattern-count CSV files;
//! * [`render`]: table, canonical JSON and CSV output;
//! * [`cli`]: the `dtadag` command.

pub mod cli;
pub mod render;
pub mod scenario_file;
pub mod tabular;

pub use scenario_file::{load_scenario, LoadError};
