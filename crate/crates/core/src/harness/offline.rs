//! Analysis of a finished run from its log directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::SimConfig;
use super::HarnessError;
use crate::comm::ChannelGraph;
use crate::metrics::{integration_phi, temporal_persistence, Binning, SynergyWeights, MISSING};
use crate::topology::{build_complex, persistence, Barcode};

pub const CONFIG_FILE: &str = "config.txt";

fn read(dir: &Path, name: &str) -> Result<(PathBuf, String), HarnessError> {
    let path = dir.join(name);
    let text = fs::read_to_string(&path).map_err(|e| HarnessError::Io {
        path: path.clone(),
        source: e,
    })?;
    Ok((path, text))
}

fn bad(path: &Path, line: usize, message: &str) -> HarnessError {
    HarnessError::Snapshot {
        path: path.to_path_buf(),
        message: format!("line {line}: {message}"),
    }
}

/// The canonical config a run wrote next to its logs.
pub fn read_config(dir: &Path) -> Result<SimConfig, HarnessError> {
    let (path, text) = read(dir, CONFIG_FILE)?;
    SimConfig::parse(&text).map_err(|error| HarnessError::Config { path, error })
}

/// Tab-separated rows after the header.
fn rows(text: &str) -> Vec<(usize, Vec<String>)> {
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| (n + 1, l.split('\t').map(str::to_string).collect()))
        .collect()
}

/// Per-tick latents of every agent from `latents.tsv`.
pub fn read_latents(dir: &Path) -> Result<BTreeMap<u64, Vec<Vec<f64>>>, HarnessError> {
    let (path, text) = read(dir, "latents.tsv")?;
    let mut out: BTreeMap<u64, Vec<Vec<f64>>> = BTreeMap::new();
    for (n, cols) in rows(&text) {
        if cols.len() != 3 {
            return Err(bad(&path, n, "expected 3 columns"));
        }
        let tick: u64 = cols[0].parse().map_err(|_| bad(&path, n, "bad tick"))?;
        let agent: usize = cols[1].parse().map_err(|_| bad(&path, n, "bad agent"))?;
        let latent = cols[2]
            .split(',')
            .map(|x| x.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|_| bad(&path, n, "bad latent value"))?;
        let row = out.entry(tick).or_default();
        if row.len() != agent {
            return Err(bad(&path, n, "agents out of order"));
        }
        row.push(latent);
    }
    Ok(out)
}

/// Integration and persistence recomputed from logged latents at every
/// multiple of the metrics stride. Matches the online values for the same
/// tick.
#[derive(Debug, Clone, PartialEq)]
pub struct OfflineRecord {
    pub tick: u64,
    pub phi: Option<f64>,
    pub t_persistence: Vec<Option<f64>>,
}

impl OfflineRecord {
    pub fn header(lags: &[usize]) -> String {
        let mut cols = vec!["tick".to_string(), "phi".into()];
        cols.extend(lags.iter().map(|l| format!("t_lag{l}")));
        cols.join("\t")
    }

    pub fn to_row(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| MISSING.to_string(), |x| format!("{x}"));
        let mut cols = vec![self.tick.to_string(), cell(self.phi)];
        cols.extend(self.t_persistence.iter().map(|&t| cell(t)));
        cols.join("\t")
    }
}

pub fn recompute_metrics(dir: &Path) -> Result<(SimConfig, Vec<OfflineRecord>), HarnessError> {
    let cfg = read_config(dir)?;
    let latents = read_latents(dir)?;
    let m = &cfg.metrics;
    let binning = Binning {
        bins: m.bins,
        strategy: m.strategy,
        dims: m.dims,
    };
    let ticks: Vec<u64> = latents.keys().copied().collect();
    let mut out = Vec::new();
    for (k, &t) in ticks.iter().enumerate() {
        let after = t + 1;
        if after % m.stride != 0 {
            continue;
        }
        let start = (k + 1).saturating_sub(m.window);
        let span = &ticks[start..=k];
        let n_agents = latents[&t].len();
        let windows: Vec<Vec<Vec<f64>>> = (0..n_agents)
            .map(|a| span.iter().map(|s| latents[s][a].clone()).collect())
            .collect();
        let phi = integration_phi(&windows, &binning, m.phi_max_agents, m.mi_min_samples).ok();
        let t_persistence = m
            .lags
            .iter()
            .map(|&lag| {
                if span.len() <= lag {
                    return None;
                }
                let ts: Vec<f64> = windows
                    .iter()
                    .filter_map(|w| temporal_persistence(w, lag).ok())
                    .collect();
                Some(ts.iter().sum::<f64>() / ts.len() as f64)
            })
            .collect();
        out.push(OfflineRecord {
            tick: after,
            phi,
            t_persistence,
        });
    }
    Ok((cfg, out))
}

/// Synergy weights and channel graph logged at `tick` (default: the last
/// logged tick), and the barcode of the complex they span.
pub fn topology_report(dir: &Path, tick: Option<u64>) -> Result<(u64, Barcode), HarnessError> {
    let cfg = read_config(dir)?;
    let (spath, stext) = read(dir, "synergy.tsv")?;
    let mut by_tick: BTreeMap<u64, SynergyWeights> = BTreeMap::new();
    for (n, cols) in rows(&stext) {
        if cols.len() != 3 {
            return Err(bad(&spath, n, "expected 3 columns"));
        }
        let t: u64 = cols[0].parse().map_err(|_| bad(&spath, n, "bad tick"))?;
        let subset = cols[1]
            .split(',')
            .map(|v| v.parse::<usize>())
            .collect::<Result<Vec<usize>, _>>()
            .map_err(|_| bad(&spath, n, "bad subset"))?;
        let w: f64 = cols[2].parse().map_err(|_| bad(&spath, n, "bad weight"))?;
        by_tick
            .entry(t)
            .or_insert_with(|| SynergyWeights {
                target: "live_count_next".into(),
                weights: BTreeMap::new(),
            })
            .weights
            .insert(subset, w);
    }
    let tick = match tick {
        Some(t) => t,
        None => *by_tick
            .keys()
            .next_back()
            .ok_or_else(|| bad(&spath, 1, "no synergy rows"))?,
    };
    let weights = by_tick.remove(&tick).unwrap_or_default();
    let n = cfg.n_agents();
    let channels = if dir.join("channels.tsv").exists() {
        let (cpath, ctext) = read(dir, "channels.tsv")?;
        let mut g = ChannelGraph::empty(tick, n, Vec::new());
        for (line, cols) in rows(&ctext) {
            if cols.len() != 4 {
                return Err(bad(&cpath, line, "expected 4 columns"));
            }
            if cols[0] != tick.to_string() {
                continue;
            }
            let parse = |s: &str| s.parse::<usize>().map_err(|_| bad(&cpath, line, "bad agent"));
            let (i, j) = (parse(&cols[1])?, parse(&cols[2])?);
            if i >= n || j >= n {
                return Err(bad(&cpath, line, "agent out of range"));
            }
            g.gamma[i][j] = cols[3].parse().map_err(|_| bad(&cpath, line, "bad gamma"))?;
            g.edges.push((i, j));
        }
        Some(g)
    } else {
        None
    };
    let complex = build_complex(&weights, channels.as_ref(), n, cfg.metrics.k_max);
    let barcode = persistence(&complex).map_err(|e| HarnessError::Invalid(e.to_string()))?;
    Ok((tick, barcode))
}
