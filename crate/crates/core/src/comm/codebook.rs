use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numeric::sq_dist;
use crate::rng::{substream, Purpose};

/// An agent's encoder prototypes and decoder table over `2^kappa` symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub owner: usize,
    pub kappa: u32,
    pub centroids: Vec<Vec<f64>>,
    pub decode_map: Vec<Vec<f64>>,
    /// Loss gradient per decoder row summed since the last adaptation.
    pub decoder_grad: Vec<Vec<f64>>,
    pub grad_ticks: u64,
}

impl Codebook {
    /// Centroids uniform in `[-scale, scale]` on the `(seed, CodebookInit,
    /// owner)` substream; the decoder starts as a copy of the centroids.
    pub fn random(owner: usize, kappa: u32, dim: usize, scale: f64, seed: u64) -> Self {
        assert!(kappa >= 1, "kappa must be at least 1");
        let mut rng = substream(seed, Purpose::CodebookInit, owner as u64, 0);
        let centroids: Vec<Vec<f64>> = (0..1usize << kappa)
            .map(|_| (0..dim).map(|_| rng.random_range(-scale..=scale)).collect())
            .collect();
        Self::from_centroids(owner, kappa, centroids)
    }

    pub fn from_centroids(owner: usize, kappa: u32, centroids: Vec<Vec<f64>>) -> Self {
        assert_eq!(centroids.len(), 1usize << kappa, "need 2^kappa centroids");
        let dim = centroids[0].len();
        assert!(centroids.iter().all(|c| c.len() == dim), "ragged centroids");
        Codebook {
            owner,
            kappa,
            decode_map: centroids.clone(),
            decoder_grad: vec![vec![0.0; dim]; centroids.len()],
            centroids,
            grad_ticks: 0,
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.centroids[0].len()
    }

    /// Nearest centroid; ties go to the lowest index.
    pub fn encode(&self, latent: &[f64]) -> u32 {
        assert_eq!(latent.len(), self.dim(), "latent dimension mismatch");
        let mut best = (0, f64::INFINITY);
        for (k, c) in self.centroids.iter().enumerate() {
            let d = sq_dist(latent, c);
            if d < best.1 {
                best = (k, d);
            }
        }
        best.0 as u32
    }

    /// Panics on a symbol outside the alphabet.
    pub fn decode(&self, symbol: u32) -> &[f64] {
        &self.decode_map[symbol as usize]
    }

    /// Adds a loss gradient with respect to the decoded vector of `symbol`.
    pub fn accumulate(&mut self, symbol: u32, grad: &[f64]) {
        for (acc, g) in self.decoder_grad[symbol as usize].iter_mut().zip(grad) {
            *acc += g;
        }
    }

    pub(crate) fn clear_gradients(&mut self) {
        self.decoder_grad.iter_mut().flatten().for_each(|g| *g = 0.0);
        self.grad_ticks = 0;
    }

    /// Mean squared distance from each sample to its encoding centroid.
    pub fn quantization_error(&self, samples: &[Vec<f64>]) -> f64 {
        if samples.is_empty() {
            return 0.0;
        }
        let total: f64 = samples
            .iter()
            .map(|s| sq_dist(s, &self.centroids[self.encode(s) as usize]))
            .sum();
        total / samples.len() as f64
    }
}
