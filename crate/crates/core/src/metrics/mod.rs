//! Information estimators and the structural metrics computed on agent
//! latents, gradients and rollouts.

mod discretize;
mod info;
mod record;
mod structural;

use thiserror::Error;

pub use discretize::{BinStrategy, Discretizer};
pub use info::{entropy, entropy_from_counts, intern, joint_codes, joint_entropy, mutual_information, Pmf};
pub use record::{MetricsRecord, MISSING};
pub use structural::{
    connected_subsets, integration_phi, latent_symbols, prediction_kl, reflexivity, synergy_weight,
    synergy_weight_exact, temporal_persistence, total_correlation, Binning, SynergyWeights,
};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("insufficient samples: {have} < {need}")]
    InsufficientSamples { have: usize, need: usize },
    #[error("trajectory of length {len} too short for lag {lag}")]
    TooShort { len: usize, lag: usize },
    #[error("{0}")]
    Agent(String),
}
