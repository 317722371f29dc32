//! Configuration files and field output.

pub mod config;
pub mod output;

pub use config::{parse_config, ConfigError, OutputKind, RunConfig};
pub use output::{read_csv, CsvField, OutputError, RunMetadata};
