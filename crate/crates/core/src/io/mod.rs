//! Configuration files, binary snapshots, CSV tables and run manifests.

pub mod config;
pub mod csv;
pub mod manifest;
pub mod snapshot;

pub use config::{parse_config, parse_config_str, RunConfig};
pub use csv::{emit_csv, CsvRow};
pub use manifest::RunManifest;
pub use snapshot::{read_snapshot, write_snapshot, SnapshotMeta};
