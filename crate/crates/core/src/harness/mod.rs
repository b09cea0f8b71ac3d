//! Configuration, the tick loop, logs, snapshots and resume.

mod config;
mod offline;
mod run;
mod world;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{AgentConfig, CommConfig, ConfigError, MetricsConfig, RunConfig, SimConfig, SubstrateConfig};
pub use offline::{read_config, read_latents, recompute_metrics, topology_report, OfflineRecord, CONFIG_FILE};
pub use run::{
    latest_snapshot, load_snapshot, run, save_snapshot, snapshot_bytes, snapshot_name, write_atomic, FileEntry,
    RunManifest, ARTIFACT_VERSION, CHANNELS_HEADER, LATENTS_HEADER, MANIFEST_FILE, MESSAGES_HEADER, SIM_HEADER,
    SYNERGY_HEADER, TILES_HEADER,
};
pub use world::{MetricsOutput, TickReport, TickSample, World};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {error}", path.display())]
    Config { path: PathBuf, error: ConfigError },
    #[error("{}: {error}", path.display())]
    Pattern {
        path: PathBuf,
        error: crate::substrate::RleError,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("tick {tick}: {message}")]
    Tick { tick: u64, message: String },
    #[error("snapshot {}: {message}", path.display())]
    Snapshot { path: PathBuf, message: String },
}
