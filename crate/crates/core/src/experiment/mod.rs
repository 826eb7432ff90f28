//! Experiment plumbing: config documents, run commands, snapshot files and
//! manifests.

mod config;
mod manifest;
mod run;
mod snapshot;

pub use config::{parse_config, validate, ConfigError, ExperimentConfig, ForcingSpec, InitSpec, PotentialSpec};
pub use manifest::{RunManifest, MANIFEST_NAME};
pub use run::{
    forcing_velocity, initial_velocity, potential_field, restrict, run, Command, RunError, DIAGNOSTIC_COLUMNS,
};
pub use snapshot::{decode_snapshot, encode_snapshot, read_snapshot, write_snapshot, SnapshotError, HEADER_LEN};
