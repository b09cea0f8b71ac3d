//! Bandwidth-limited messaging between agents: codebooks over `2^kappa`
//! symbols, two-phase routing, channel information and codebook adaptation.

mod codebook;
mod topology;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use codebook::Codebook;
pub use topology::{Topology, TopologyKind};

use crate::metrics::{mutual_information, BinStrategy, Discretizer};
use crate::numeric::{l2_norm, sq_dist};
use crate::rng::{substream, Purpose};

#[derive(Debug, Error, PartialEq)]
pub enum CommError {
    #[error("topology: {0}")]
    Topology(String),
    #[error("no edge {from}>{to} in the communication graph")]
    MissingEdge { from: usize, to: usize },
    #[error("cycle needs at least two agents")]
    ShortCycle,
    #[error("insufficient samples: {have} < {need}")]
    InsufficientSamples { have: usize, need: usize },
}

/// Symbols sent at one tick, one per directed edge, sorted by edge.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MessageFrame {
    pub tick: u64,
    pub edges: Vec<(usize, usize, u32)>,
}

impl MessageFrame {
    pub fn symbol(&self, from: usize, to: usize) -> Option<u32> {
        self.edges
            .binary_search_by(|e| (e.0, e.1).cmp(&(from, to)))
            .ok()
            .map(|k| self.edges[k].2)
    }

    /// Replaces the symbol on an existing edge; returns the previous one.
    pub fn replace(&mut self, from: usize, to: usize, symbol: u32) -> Option<u32> {
        let k = self.edges.binary_search_by(|e| (e.0, e.1).cmp(&(from, to))).ok()?;
        Some(std::mem::replace(&mut self.edges[k].2, symbol))
    }
}

/// Encodes every sender's tick-`tick` latent with its own codebook.
pub fn encode_frame(topology: &Topology, latents: &[Vec<f64>], books: &[Codebook], tick: u64) -> MessageFrame {
    let edges = topology
        .edges()
        .into_iter()
        .map(|(i, j)| (i, j, books[i].encode(&latents[i])))
        .collect();
    MessageFrame { tick, edges }
}

/// Message slots for every receiver: slot fed by `i` of agent `j` holds
/// `d_j(symbol)`; slots without a sender or without a symbol hold zeros.
pub fn decode_frame(topology: &Topology, frame: &MessageFrame, books: &[Codebook], dim: usize) -> Vec<Vec<Vec<f64>>> {
    (0..topology.n_agents)
        .map(|j| {
            topology
                .slots(j)
                .iter()
                .map(|sender| match sender.and_then(|i| frame.symbol(i, j)) {
                    Some(m) => books[j].decode(m).to_vec(),
                    None => vec![0.0; dim],
                })
                .collect()
        })
        .collect()
}

/// Two-phase routing: every encode reads the given latents, every decode
/// feeds the next tick's inputs.
pub fn route(
    topology: &Topology,
    latents: &[Vec<f64>],
    books: &[Codebook],
    tick: u64,
) -> (MessageFrame, Vec<Vec<Vec<f64>>>) {
    let frame = encode_frame(topology, latents, books, tick);
    let dim = books.first().map_or(0, Codebook::dim);
    let slots = decode_frame(topology, &frame, books, dim);
    (frame, slots)
}

/// Directed channel information `gamma[i][j]` in bits at one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelGraph {
    pub tick: u64,
    pub gamma: Vec<Vec<f64>>,
    pub edges: Vec<(usize, usize)>,
}

impl ChannelGraph {
    pub fn empty(tick: u64, n: usize, edges: Vec<(usize, usize)>) -> Self {
        ChannelGraph {
            tick,
            gamma: vec![vec![0.0; n]; n],
            edges,
        }
    }

    /// Mean and max over the listed edges.
    pub fn summary(&self) -> (f64, f64) {
        if self.edges.is_empty() {
            return (0.0, 0.0);
        }
        let values: Vec<f64> = self.edges.iter().map(|&(i, j)| self.gamma[i][j]).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        (mean, values.into_iter().fold(0.0, f64::max))
    }
}

/// Plug-in `I(source; reconstruction)` in bits, both sides discretized on
/// their own window.
pub fn channel_mi(
    source: &[Vec<f64>],
    reconstruction: &[Vec<f64>],
    bins: usize,
    strategy: BinStrategy,
    min_samples: usize,
) -> Result<f64, CommError> {
    assert_eq!(source.len(), reconstruction.len(), "unpaired channel samples");
    if source.len() < min_samples.max(1) {
        return Err(CommError::InsufficientSamples {
            have: source.len(),
            need: min_samples.max(1),
        });
    }
    let xs = Discretizer::fit(source, bins, strategy).symbols(source);
    let ys = Discretizer::fit(reconstruction, bins, strategy).symbols(reconstruction);
    Ok(mutual_information(&xs, &ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptParams {
    pub vq_rate: f64,
    pub decoder_lr: f64,
}

/// One adaptation round. Each centroid of book `i` moves by `vq_rate`
/// toward the mean of the recent latents of agent `i` assigned to it; a
/// centroid with no assignments is re-seeded to a random recent latent
/// drawn from the `(seed, CodebookReseed, owner, tick)` substream. Each
/// decoder row takes one step against its loss gradient averaged over the
/// ticks since the previous round. A zero `vq_rate` freezes the encoder.
pub fn adapt_codebooks(books: &mut [Codebook], windows: &[Vec<Vec<f64>>], params: AdaptParams, seed: u64, tick: u64) {
    assert_eq!(books.len(), windows.len(), "one latent window per codebook");
    for (book, window) in books.iter_mut().zip(windows) {
        if params.vq_rate > 0.0 && !window.is_empty() {
            let dim = book.dim();
            let mut sums = vec![vec![0.0; dim]; book.alphabet_size()];
            let mut counts = vec![0usize; book.alphabet_size()];
            for latent in window {
                let k = book.encode(latent) as usize;
                counts[k] += 1;
                sums[k].iter_mut().zip(latent).for_each(|(s, x)| *s += x);
            }
            let mut rng = substream(seed, Purpose::CodebookReseed, book.owner as u64, tick);
            for (k, centroid) in book.centroids.iter_mut().enumerate() {
                if counts[k] == 0 {
                    *centroid = window[rng.random_range(0..window.len())].clone();
                } else {
                    let n = counts[k] as f64;
                    for (c, s) in centroid.iter_mut().zip(&sums[k]) {
                        *c += params.vq_rate * (s / n - *c);
                    }
                }
            }
        }
        if params.decoder_lr > 0.0 && book.grad_ticks > 0 {
            let scale = params.decoder_lr / book.grad_ticks as f64;
            for (row, grad) in book.decode_map.iter_mut().zip(&book.decoder_grad) {
                row.iter_mut().zip(grad).for_each(|(r, g)| *r -= scale * g);
            }
        }
        book.clear_gradients();
    }
}

/// Transports `latent` from `cycle[0]` through each hop back to `cycle[0]`.
pub fn transport(books: &[Codebook], cycle: &[usize], latent: &[f64]) -> Vec<f64> {
    let mut v = latent.to_vec();
    for (k, &from) in cycle.iter().enumerate() {
        let to = cycle[(k + 1) % cycle.len()];
        v = books[to].decode(books[from].encode(&v)).to_vec();
    }
    v
}

const CURVATURE_EPS: f64 = 1e-12;

/// Mean relative drift `|ι - T(ι)| / (|ι| + ε)` of latents carried around
/// `cycle`; every hop must be an edge of `topology`.
pub fn curvature(
    books: &[Codebook],
    topology: &Topology,
    cycle: &[usize],
    samples: &[Vec<f64>],
) -> Result<f64, CommError> {
    if cycle.len() < 2 {
        return Err(CommError::ShortCycle);
    }
    for (k, &from) in cycle.iter().enumerate() {
        let to = cycle[(k + 1) % cycle.len()];
        if !topology.has_edge(from, to) {
            return Err(CommError::MissingEdge { from, to });
        }
    }
    if samples.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = samples
        .iter()
        .map(|s| sq_dist(s, &transport(books, cycle, s)).sqrt() / (l2_norm(s) + CURVATURE_EPS))
        .sum();
    Ok(total / samples.len() as f64)
}
