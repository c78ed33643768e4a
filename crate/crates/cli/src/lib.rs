//! Library side of the `pcqa` command: report encoding, CSV schemas,
//! subcommand bodies and the batch pipeline.

pub mod commands;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod profile;
pub mod report;
pub mod tables;

pub use error::{CliError, CliResult};
pub use manifest::RunManifest;
pub use pipeline::{run_pipeline, PipelineOptions, PipelineReport, Step};
pub use profile::{LoadedProfile, Profile};
