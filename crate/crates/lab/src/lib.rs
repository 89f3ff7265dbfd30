//! Experiment orchestration for the Klein-Gordon-Zakharov laboratory:
//! configuration files, checkpoints, CSV/JSON artifacts with a run manifest,
//! and the `kgz-lab` command line.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod run;

pub use checkpoint::{checkpoint_load, checkpoint_save, Checkpoint};
pub use config::{parse_config, parse_str, ExperimentConfig};
pub use error::{LabError, LabResult};
pub use run::{run, RunOptions, Subcommand};
