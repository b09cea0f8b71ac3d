//! Per-region predictive agents trained online by cross-entropy against the
//! next substrate state.

mod network;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use network::{Arch, Cache, Layout};

use crate::rng::{substream, Purpose};
use crate::substrate::Grid;

/// Predictions are clamped into `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub const PROB_CLAMP: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("agent {agent}: {message}")]
    Layout { agent: usize, message: String },
    #[error("agent {agent}: non-finite {what}")]
    NonFinite { agent: usize, what: &'static str },
}

/// A square tile of the substrate plus a halo of context cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub x0: usize,
    pub y0: usize,
    pub size: usize,
    pub halo: usize,
}

impl Region {
    pub fn view_side(&self) -> usize {
        self.size + 2 * self.halo
    }

    pub fn view_len(&self) -> usize {
        self.view_side() * self.view_side()
    }

    pub fn cell_count(&self) -> usize {
        self.size * self.size
    }

    /// Region plus halo, row-major, torus-wrapped.
    pub fn view(&self, grid: &Grid) -> Vec<f64> {
        let side = self.view_side() as isize;
        let (x0, y0) = (
            self.x0 as isize - self.halo as isize,
            self.y0 as isize - self.halo as isize,
        );
        let mut out = Vec::with_capacity(self.view_len());
        for dy in 0..side {
            for dx in 0..side {
                out.push(grid.get_wrapped(x0 + dx, y0 + dy) as f64);
            }
        }
        out
    }

    /// The owned cells, row-major.
    pub fn cells(&self, grid: &Grid) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.cell_count());
        for dy in 0..self.size {
            for dx in 0..self.size {
                out.push(grid.get_wrapped((self.x0 + dx) as isize, (self.y0 + dy) as isize));
            }
        }
        out
    }

    /// Whether local cell `k` has a Life neighbor outside the tile.
    pub fn is_boundary_cell(&self, k: usize) -> bool {
        let (x, y) = (k % self.size, k / self.size);
        x == 0 || y == 0 || x + 1 == self.size || y + 1 == self.size
    }
}

/// Network input: the substrate view and one decoded message vector per slot.
/// Slots without a sender hold zero vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentInput {
    pub view: Vec<f64>,
    pub messages: Vec<Vec<f64>>,
}

impl AgentInput {
    pub fn silent(view: Vec<f64>, n_slots: usize, latent_dim: usize) -> Self {
        AgentInput {
            view,
            messages: vec![vec![0.0; latent_dim]; n_slots],
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut x = self.view.clone();
        for m in &self.messages {
            x.extend_from_slice(m);
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probs: Vec<f64>,
}

/// Mean per-cell binary cross-entropy in nats.
pub fn loss(pred: &Prediction, observed: &[u8]) -> f64 {
    assert_eq!(
        pred.probs.len(),
        observed.len(),
        "prediction and observation lengths differ"
    );
    let total: f64 = pred.probs.iter().zip(observed).map(|(&p, &s)| cell_loss(p, s)).sum();
    total / observed.len() as f64
}

pub fn cell_loss(p: f64, s: u8) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if s == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub prediction: Prediction,
    pub cache: Cache,
}

impl ForwardPass {
    pub fn latent(&self) -> &[f64] {
        &self.cache.h2
    }

    pub fn logits(&self) -> &[f64] {
        &self.cache.logits
    }
}

/// Gradients split by where they land.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub params: Vec<f64>,
    pub view: Vec<f64>,
    pub messages: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.params
            .iter()
            .chain(&self.view)
            .chain(self.messages.iter().flatten())
            .all(|g| g.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    pub momentum: f64,
    pub velocity: Vec<f64>,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum UpdateOutcome {
    Applied { loss: f64 },
    Skipped { loss: f64, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: usize,
    pub region: Region,
    pub layout: Layout,
    pub params: Vec<f64>,
    pub optimizer: Optimizer,
}

impl Agent {
    /// Parameters drawn from `uniform(-a, a)`, `a = 1/√fan_in`, on the
    /// `(seed, AgentInit, id)` substream.
    pub fn new(id: usize, region: Region, layout: Layout, momentum: f64, seed: u64) -> Self {
        let mut rng = substream(seed, Purpose::AgentInit, id as u64, 0);
        let params = layout
            .fan_in()
            .into_iter()
            .map(|fan| {
                let a = 1.0 / (fan.max(1) as f64).sqrt();
                rng.random_range(-a..a)
            })
            .collect::<Vec<_>>();
        let n = params.len();
        Agent {
            id,
            region,
            layout,
            params,
            optimizer: Optimizer {
                momentum,
                velocity: vec![0.0; n],
                steps: 0,
            },
        }
    }

    pub fn check_input(&self, input: &AgentInput) -> Result<(), AgentError> {
        let l = &self.layout;
        let bad = |message: String| {
            Err(AgentError::Layout {
                agent: self.id,
                message,
            })
        };
        if input.view.len() != l.view_len {
            return bad(format!("view has {} cells, expected {}", input.view.len(), l.view_len));
        }
        if input.messages.len() != l.n_slots {
            return bad(format!(
                "{} message slots, expected {}",
                input.messages.len(),
                l.n_slots
            ));
        }
        if let Some(m) = input.messages.iter().find(|m| m.len() != l.latent_dim) {
            return bad(format!("message of length {}, expected {}", m.len(), l.latent_dim));
        }
        Ok(())
    }

    pub fn forward(&self, input: &AgentInput) -> Result<ForwardPass, AgentError> {
        self.check_input(input)?;
        let cache = self.layout.forward(&self.params, &input.flatten());
        if !cache.logits.iter().all(|z| z.is_finite()) {
            return Err(AgentError::NonFinite {
                agent: self.id,
                what: "logits",
            });
        }
        let probs = cache
            .logits
            .iter()
            .map(|&z| sigmoid(z).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
            .collect();
        Ok(ForwardPass {
            prediction: Prediction { probs },
            cache,
        })
    }

    /// Panics on a layout mismatch.
    pub fn predict(&self, input: &AgentInput) -> Prediction {
        self.forward(input).unwrap_or_else(|e| panic!("{e}")).prediction
    }

    pub fn latent(&self, input: &AgentInput) -> Vec<f64> {
        self.forward(input).unwrap_or_else(|e| panic!("{e}")).latent().to_vec()
    }

    fn split_input_grad(&self, d_input: Vec<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
        let l = &self.layout;
        let view = d_input[..l.view_len].to_vec();
        let messages = d_input[l.view_len..]
            .chunks(l.latent_dim.max(1))
            .take(l.n_slots)
            .map(|c| c.to_vec())
            .collect();
        (view, messages)
    }

    fn backprop(&self, pass: &ForwardPass, d_logits: &[f64]) -> Gradients {
        let (params, d_input) = self.layout.backward(&self.params, &pass.cache, d_logits);
        let (view, messages) = self.split_input_grad(d_input);
        Gradients { params, view, messages }
    }

    /// Gradients of the mean cross-entropy against `observed`.
    pub fn loss_gradients(&self, pass: &ForwardPass, observed: &[u8]) -> Gradients {
        let n = observed.len() as f64;
        let d_logits: Vec<f64> = pass
            .logits()
            .iter()
            .zip(observed)
            .map(|(&z, &s)| (sigmoid(z) - s as f64) / n)
            .collect();
        self.backprop(pass, &d_logits)
    }

    /// Gradients of the mean logit.
    pub fn mean_logit_gradients(&self, pass: &ForwardPass) -> Gradients {
        let n = pass.logits().len() as f64;
        self.backprop(pass, &vec![1.0 / n; pass.logits().len()])
    }

    /// One optimizer step with precomputed gradients. Non-finite gradients
    /// skip the step and leave the agent untouched.
    pub fn apply(&mut self, grads: &Gradients, loss: f64, lr: f64) -> UpdateOutcome {
        assert!(lr >= 0.0, "learning rate must be non-negative");
        if !grads.is_finite() {
            return UpdateOutcome::Skipped {
                loss,
                reason: format!(
                    "agent {}: non-finite gradient at step {}",
                    self.id, self.optimizer.steps
                ),
            };
        }
        let mu = self.optimizer.momentum;
        for ((p, v), g) in self
            .params
            .iter_mut()
            .zip(&mut self.optimizer.velocity)
            .zip(&grads.params)
        {
            *v = mu * *v + g;
            *p -= lr * *v;
        }
        self.optimizer.steps += 1;
        UpdateOutcome::Applied { loss }
    }

    /// Forward, backprop and one step on the loss against `observed`.
    pub fn update(&mut self, input: &AgentInput, observed: &[u8], lr: f64) -> Result<UpdateOutcome, AgentError> {
        let pass = self.forward(input)?;
        let l = loss(&pass.prediction, observed);
        let grads = self.loss_gradients(&pass, observed);
        Ok(self.apply(&grads, l, lr))
    }
}
