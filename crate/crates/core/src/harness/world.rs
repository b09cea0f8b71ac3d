//! The simulated world and its tick.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::HarnessError;
use crate::agents::{cell_loss, loss, Agent, AgentInput, ForwardPass, Gradients, Layout, Prediction, Region};
use crate::comm::{
    adapt_codebooks, channel_mi, decode_frame, encode_frame, AdaptParams, ChannelGraph, Codebook, MessageFrame,
    Topology,
};
use crate::metrics::{
    connected_subsets, integration_phi, latent_symbols, prediction_kl, reflexivity, synergy_weight,
    temporal_persistence, Binning, Discretizer, MetricsRecord, SynergyWeights,
};
use crate::rng::{substream, Purpose};
use crate::substrate::{parse_rle, step_life_parallel, Grid};
use crate::topology::{build_complex, persistence};

/// What one tick leaves behind for the metric windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickSample {
    pub tick: u64,
    /// Latent of every agent at this tick.
    pub latents: Vec<Vec<f64>>,
    /// Symbol each agent sent, if it has out-edges.
    pub symbols: Vec<Option<u32>>,
    /// Live cells of each tile after the step.
    pub live: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsOutput {
    pub record: MetricsRecord,
    pub channels: Option<ChannelGraph>,
    pub synergy: SynergyWeights,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickReport {
    /// World tick after the step.
    pub tick: u64,
    pub population: usize,
    pub mean_loss: f64,
    pub boundary_loss: f64,
    pub interior_loss: f64,
    pub diagnostics: Vec<String>,
    pub frame: MessageFrame,
    pub sample: TickSample,
    pub metrics: Option<MetricsOutput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub config: SimConfig,
    pub grid: Grid,
    pub agents: Vec<Agent>,
    pub books: Vec<Codebook>,
    /// Configured communication graph.
    pub topology: Topology,
    /// Graph messages actually travel on; silenced when messaging is off.
    pub links: Topology,
    /// Symbols encoded last tick, consumed by the next.
    pub pending: MessageFrame,
    pub history: VecDeque<TickSample>,
    pub last_inputs: Vec<AgentInput>,
    loss_sums: Vec<f64>,
    loss_ticks: u64,
}

fn tick_error(tick: u64, message: impl Into<String>) -> HarnessError {
    HarnessError::Tick {
        tick,
        message: message.into(),
    }
}

impl World {
    pub fn new(config: SimConfig) -> Result<Self, HarnessError> {
        config
            .validate()
            .map_err(|(sec, key, message)| HarnessError::Invalid(format!("{sec}.{key}: {message}")))?;
        let s = &config.substrate;
        let seed = config.run.seed;
        let mut grid = Grid::new(s.width, s.height);
        if let Some(path) = &s.pattern {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
                path: path.clone(),
                source: e,
            })?;
            let pattern = parse_rle(&text).map_err(|e| HarnessError::Pattern {
                path: path.clone(),
                error: e,
            })?;
            grid.stamp(&pattern.cells_vec(), s.pattern_x, s.pattern_y);
        } else if s.density > 0.0 {
            let mut rng = substream(seed, Purpose::SubstrateInit, 0, 0);
            for y in 0..s.height {
                for x in 0..s.width {
                    if rng.random_bool(s.density) {
                        grid.set(x, y, 1);
                    }
                }
            }
        }

        let n = config.n_agents();
        let topology = Topology::new(config.topology_kind(), n).map_err(|e| HarnessError::Invalid(e.to_string()))?;
        let links = if config.comm.enabled {
            topology.clone()
        } else {
            topology.silenced()
        };
        let a = &config.agents;
        let cols = s.width / a.tile;
        let agents: Vec<Agent> = (0..n)
            .map(|id| {
                let region = Region {
                    x0: (id % cols) * a.tile,
                    y0: (id / cols) * a.tile,
                    size: a.tile,
                    halo: a.halo,
                };
                let layout = Layout {
                    arch: a.arch,
                    view_len: region.view_len(),
                    n_slots: topology.n_slots(),
                    latent_dim: a.latent_dim,
                    hidden: a.hidden,
                    outputs: region.cell_count(),
                };
                Agent::new(id, region, layout, a.momentum, seed)
            })
            .collect();
        let books = (0..n)
            .map(|id| Codebook::random(id, config.comm.kappa, a.latent_dim, config.comm.init_scale, seed))
            .collect();
        Ok(World {
            grid,
            agents,
            books,
            topology,
            links,
            pending: MessageFrame::default(),
            history: VecDeque::new(),
            last_inputs: Vec::new(),
            loss_sums: vec![0.0; n],
            loss_ticks: 0,
            config,
        })
    }

    pub fn tick_count(&self) -> u64 {
        self.grid.tick()
    }

    fn history_capacity(&self) -> usize {
        let mut cap = 1;
        if self.config.metrics.enabled {
            cap = cap.max(self.config.metrics.window);
        }
        if self.config.comm.enabled {
            cap = cap.max(self.config.comm.codebook_period as usize);
        }
        cap
    }

    /// Inputs for the current tick: views plus decoded pending messages.
    pub fn inputs(&self) -> Vec<AgentInput> {
        let slots = decode_frame(&self.links, &self.pending, &self.books, self.config.agents.latent_dim);
        self.agents
            .iter()
            .zip(slots)
            .map(|(agent, messages)| AgentInput {
                view: agent.region.view(&self.grid),
                messages,
            })
            .collect()
    }

    fn forward_all(&self, inputs: &[AgentInput]) -> Result<Vec<ForwardPass>, HarnessError> {
        let tick = self.tick_count();
        self.agents
            .par_iter()
            .zip(inputs.par_iter())
            .map(|(agent, input)| agent.forward(input).map_err(|e| tick_error(tick, e.to_string())))
            .collect()
    }

    /// Phase 1 only: every agent's prediction of the next state.
    pub fn predictions(&self) -> Result<Vec<Prediction>, HarnessError> {
        Ok(self
            .forward_all(&self.inputs())?
            .into_iter()
            .map(|p| p.prediction)
            .collect())
    }

    /// Advances one tick. On error the world is left unchanged.
    pub fn tick(&mut self) -> Result<TickReport, HarnessError> {
        self.step(true)
    }

    fn step(&mut self, with_metrics: bool) -> Result<TickReport, HarnessError> {
        let t = self.tick_count();
        let comm_on = self.config.comm.enabled;

        // (1) predict
        let inputs = self.inputs();
        let passes = self.forward_all(&inputs)?;
        let latents: Vec<Vec<f64>> = passes.iter().map(|p| p.latent().to_vec()).collect();
        if latents.iter().flatten().any(|x| !x.is_finite()) {
            return Err(tick_error(t, "non-finite latent"));
        }

        // (2) the substrate evolves on its own
        let next = step_life_parallel(&self.grid);

        // (3) losses and gradients, committed below
        let observed: Vec<Vec<u8>> = self.agents.iter().map(|a| a.region.cells(&next)).collect();
        let losses: Vec<f64> = passes
            .iter()
            .zip(&observed)
            .map(|(p, o)| loss(&p.prediction, o))
            .collect();
        let grads: Vec<Gradients> = self
            .agents
            .par_iter()
            .zip(passes.par_iter())
            .zip(observed.par_iter())
            .map(|((agent, pass), obs)| agent.loss_gradients(pass, obs))
            .collect();
        let (mut boundary, mut nb, mut interior, mut ni) = (0.0, 0usize, 0.0, 0usize);
        for ((agent, pass), obs) in self.agents.iter().zip(&passes).zip(&observed) {
            for (k, (&p, &s)) in pass.prediction.probs.iter().zip(obs).enumerate() {
                if agent.region.is_boundary_cell(k) {
                    boundary += cell_loss(p, s);
                    nb += 1;
                } else {
                    interior += cell_loss(p, s);
                    ni += 1;
                }
            }
        }

        // (4) encode this tick's latents for the next tick
        let frame = if comm_on {
            encode_frame(&self.links, &latents, &self.books, t)
        } else {
            MessageFrame {
                tick: t,
                edges: Vec::new(),
            }
        };
        let senders: Vec<bool> = (0..self.agents.len())
            .map(|i| !self.links.out_neighbors(i).is_empty())
            .collect();
        let symbols: Vec<Option<u32>> = latents
            .iter()
            .enumerate()
            .map(|(i, l)| (comm_on && senders[i]).then(|| self.books[i].encode(l)))
            .collect();
        let live: Vec<u32> = observed.iter().map(|o| o.iter().map(|&c| c as u32).sum()).collect();

        // commit
        let lr = self.config.agents.lr;
        let mut diagnostics = Vec::new();
        for ((agent, g), &l) in self.agents.iter_mut().zip(&grads).zip(&losses) {
            if let crate::agents::UpdateOutcome::Skipped { reason, .. } = agent.apply(g, l, lr) {
                diagnostics.push(reason);
            }
        }
        if comm_on {
            for (j, g) in grads.iter().enumerate() {
                if !g.is_finite() {
                    continue;
                }
                for (s, sender) in self.links.slots(j).iter().enumerate() {
                    if let Some(m) = sender.and_then(|i| self.pending.symbol(i, j)) {
                        self.books[j].accumulate(m, &g.messages[s]);
                    }
                }
            }
            self.books.iter_mut().for_each(|b| b.grad_ticks += 1);
        }
        self.grid = next;
        self.pending = frame.clone();
        for (sum, l) in self.loss_sums.iter_mut().zip(&losses) {
            *sum += l;
        }
        self.loss_ticks += 1;
        let sample = TickSample {
            tick: t,
            latents,
            symbols,
            live,
        };
        self.history.push_back(sample.clone());
        while self.history.len() > self.history_capacity() {
            self.history.pop_front();
        }
        self.last_inputs = inputs;

        // (5) codebook adaptation
        let now = self.tick_count();
        if comm_on && now.is_multiple_of(self.config.comm.codebook_period) {
            let period = self.config.comm.codebook_period as usize;
            let recent: Vec<&TickSample> = self.history.iter().rev().take(period).collect();
            let windows: Vec<Vec<Vec<f64>>> = (0..self.agents.len())
                .map(|i| recent.iter().rev().map(|s| s.latents[i].clone()).collect())
                .collect();
            let params = AdaptParams {
                vq_rate: self.config.comm.vq_rate,
                decoder_lr: self.config.comm.decoder_lr,
            };
            adapt_codebooks(&mut self.books, &windows, params, self.config.run.seed, t);
        }

        // (6) metrics
        let metrics = if with_metrics && self.config.metrics.enabled && now.is_multiple_of(self.config.metrics.stride) {
            Some(self.compute_metrics()?)
        } else {
            None
        };

        let mean = |sum: f64, n: usize| if n == 0 { 0.0 } else { sum / n as f64 };
        Ok(TickReport {
            tick: now,
            population: self.grid.population(),
            mean_loss: mean(losses.iter().sum(), losses.len()),
            boundary_loss: mean(boundary, nb),
            interior_loss: mean(interior, ni),
            diagnostics,
            frame,
            sample,
            metrics,
        })
    }

    /// Latent windows per agent, oldest first.
    fn latent_windows(&self) -> Vec<Vec<Vec<f64>>> {
        let w = self.config.metrics.window;
        let recent: Vec<&TickSample> = self.history.iter().rev().take(w).collect();
        (0..self.agents.len())
            .map(|i| recent.iter().rev().map(|s| s.latents[i].clone()).collect())
            .collect()
    }

    fn binning(&self) -> Binning {
        let m = &self.config.metrics;
        Binning {
            bins: m.bins,
            strategy: m.strategy,
            dims: m.dims,
        }
    }

    /// The intervened edge for causal efficacy.
    pub fn efficacy_edge(&self) -> Option<(usize, usize)> {
        self.config
            .metrics
            .efficacy_edge
            .or_else(|| self.topology.edges().first().copied())
    }

    /// Directed channel information on every active edge, recomputed with
    /// the current codebooks over the latent window.
    pub fn channel_graph(&self) -> Option<ChannelGraph> {
        if !self.config.comm.enabled {
            return None;
        }
        let m = &self.config.metrics;
        let windows = self.latent_windows();
        let edges = self.links.edges();
        let mut graph = ChannelGraph::empty(self.tick_count(), self.agents.len(), edges.clone());
        for &(i, j) in &edges {
            let recon: Vec<Vec<f64>> = windows[i]
                .iter()
                .map(|l| self.books[j].decode(self.books[i].encode(l)).to_vec())
                .collect();
            match channel_mi(&windows[i], &recon, m.bins, m.strategy, m.mi_min_samples) {
                Ok(g) => graph.gamma[i][j] = g,
                Err(_) => return None,
            }
        }
        Some(graph)
    }

    /// Synergy of connected agent subsets about the binned live count of
    /// their joint tiles one tick ahead. Sources are sent symbols, or
    /// discretized latents when messaging is off.
    pub fn synergy(&self) -> SynergyWeights {
        let m = &self.config.metrics;
        let mut out = SynergyWeights {
            target: "live_count_next".into(),
            weights: Default::default(),
        };
        let recent: Vec<&TickSample> = self.history.iter().rev().take(m.window).rev().collect();
        if recent.len() < m.mi_min_samples.max(1) {
            return out;
        }
        let n = self.agents.len();
        let sources: Vec<Vec<u32>> = if self.config.comm.enabled {
            (0..n)
                .map(|i| recent.iter().map(|s| s.symbols[i].unwrap_or(0)).collect())
                .collect()
        } else {
            let binning = self.binning();
            self.latent_windows()
                .iter()
                .map(|w| latent_symbols(w, &binning))
                .collect()
        };
        for subset in connected_subsets(n, m.k_max, |a, b| self.topology.adjacent(a, b)) {
            let counts: Vec<Vec<f64>> = recent
                .iter()
                .map(|s| vec![subset.iter().map(|&a| s.live[a] as f64).sum()])
                .collect();
            let target = Discretizer::fit(&counts, m.bins, m.strategy).symbols(&counts);
            let xs: Vec<&[u32]> = subset.iter().map(|&a| sources[a].as_slice()).collect();
            out.weights.insert(subset, synergy_weight(&target, &xs));
        }
        out
    }

    /// Mean KL (bits) between factual and intervened predictions of `to` and
    /// the agents within `horizon` hops downstream of it, after `horizon`
    /// ticks from a world whose pending symbol on `from > to` is replaced.
    pub fn causal_efficacy_with(
        &self,
        (from, to): (usize, usize),
        horizon: u64,
        symbol: u32,
    ) -> Result<f64, HarnessError> {
        let mut intervened = self.clone();
        if intervened.pending.replace(from, to, symbol).is_none() {
            return Ok(0.0);
        }
        let mut downstream = self.links.reachable(to, horizon as usize);
        downstream.insert(to);
        let observed: Vec<usize> = downstream.into_iter().collect();
        let mut factual = self.clone();
        for _ in 0..horizon {
            factual.step(false)?;
            intervened.step(false)?;
        }
        let (pf, pi) = (factual.predictions()?, intervened.predictions()?);
        let total: f64 = observed.iter().map(|&a| prediction_kl(&pf[a], &pi[a])).sum();
        Ok(total / observed.len() as f64)
    }

    /// Causal efficacy with a uniformly resampled symbol drawn from the
    /// `(seed, Intervention, 0, tick)` substream.
    pub fn causal_efficacy(&self, edge: (usize, usize), horizon: u64) -> Result<f64, HarnessError> {
        let mut rng = substream(self.config.run.seed, Purpose::Intervention, 0, self.tick_count());
        let symbol = rng.random_range(0..1u32 << self.config.comm.kappa);
        self.causal_efficacy_with(edge, horizon, symbol)
    }

    pub fn compute_metrics(&mut self) -> Result<MetricsOutput, HarnessError> {
        let m = self.config.metrics.clone();
        let windows = self.latent_windows();
        let have = windows.first().map_or(0, Vec::len);
        let phi = integration_phi(&windows, &self.binning(), m.phi_max_agents, m.mi_min_samples).ok();
        let r_mean = if self.topology.n_slots() > 0 && !self.last_inputs.is_empty() {
            let rs: Result<Vec<f64>, _> = self
                .agents
                .iter()
                .zip(&self.last_inputs)
                .map(|(a, x)| reflexivity(a, std::slice::from_ref(x)))
                .collect();
            let rs = rs.map_err(|e| tick_error(self.tick_count(), e.to_string()))?;
            Some(rs.iter().sum::<f64>() / rs.len() as f64)
        } else {
            None
        };
        let t_persistence = m
            .lags
            .iter()
            .map(|&lag| {
                if have <= lag {
                    return None;
                }
                let ts: Vec<f64> = windows
                    .iter()
                    .filter_map(|w| temporal_persistence(w, lag).ok())
                    .collect();
                Some(ts.iter().sum::<f64>() / ts.len() as f64)
            })
            .collect();
        let e_efficacy = match (self.config.comm.enabled, self.efficacy_edge()) {
            (true, Some(edge)) => Some(self.causal_efficacy(edge, m.horizon)?),
            (true, None) => Some(0.0),
            _ => None,
        };
        let channels = if have >= m.mi_min_samples {
            self.channel_graph()
        } else {
            None
        };
        let synergy = self.synergy();
        let coherence = if have >= m.mi_min_samples {
            let complex = build_complex(&synergy, channels.as_ref(), self.agents.len(), m.k_max);
            let barcode = persistence(&complex).map_err(|e| tick_error(self.tick_count(), e.to_string()))?;
            Some(barcode.coherence(m.alpha))
        } else {
            None
        };
        let (gamma_mean, gamma_max) = match &channels {
            Some(g) => {
                let (a, b) = g.summary();
                (Some(a), Some(b))
            }
            None => (None, None),
        };
        let ticks = self.loss_ticks.max(1) as f64;
        let per_agent_loss = self.loss_sums.iter().map(|s| s / ticks).collect();
        self.loss_sums.iter_mut().for_each(|s| *s = 0.0);
        self.loss_ticks = 0;
        Ok(MetricsOutput {
            record: MetricsRecord {
                tick: self.tick_count(),
                phi,
                r_mean,
                t_persistence,
                e_efficacy,
                gamma_mean,
                gamma_max,
                coherence,
                per_agent_loss,
            },
            channels,
            synergy,
        })
    }
}
