//! Integration, reflexivity, persistence, efficacy and synergy.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::discretize::{BinStrategy, Discretizer};
use super::info::{entropy, joint_codes, mutual_information, Pmf};
use super::MetricError;
use crate::agents::{Agent, AgentInput, Prediction, PROB_CLAMP};

/// `sum_i H(X_i) - H(X_1..X_n)` in bits from paired samples.
pub fn total_correlation(columns: &[Vec<u32>]) -> f64 {
    if columns.len() < 2 {
        return 0.0;
    }
    let refs: Vec<&[u32]> = columns.iter().map(Vec::as_slice).collect();
    let singles: f64 = refs.iter().map(|c| entropy(c)).sum();
    (singles - entropy(&joint_codes(&refs))).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub bins: usize,
    pub strategy: BinStrategy,
    /// Leading latent coordinates kept per agent.
    pub dims: usize,
}

/// One symbol per tick for each agent's window of latents, discretized on
/// the leading `binning.dims` coordinates.
pub fn latent_symbols(window: &[Vec<f64>], binning: &Binning) -> Vec<u32> {
    let cut: Vec<Vec<f64>> = window.iter().map(|v| v[..binning.dims.min(v.len())].to_vec()).collect();
    Discretizer::fit(&cut, binning.bins, binning.strategy).symbols(&cut)
}

/// Total correlation of discretized latents, `windows[agent][tick]`,
/// summed over consecutive disjoint groups of at most `max_group` agents.
pub fn integration_phi(
    windows: &[Vec<Vec<f64>>],
    binning: &Binning,
    max_group: usize,
    min_samples: usize,
) -> Result<f64, MetricError> {
    let have = windows.iter().map(Vec::len).min().unwrap_or(0);
    if have < min_samples.max(1) {
        return Err(MetricError::InsufficientSamples {
            have,
            need: min_samples.max(1),
        });
    }
    let symbols: Vec<Vec<u32>> = windows
        .iter()
        .map(|w| latent_symbols(&w[w.len() - have..], binning))
        .collect();
    Ok(symbols.chunks(max_group.max(1)).map(total_correlation).sum())
}

/// Share of the mean-logit gradient flowing through the message slots,
/// `G_m / (G_m + G_s)` with L1 norms averaged over the batch; 0 when both
/// vanish or the batch is empty.
pub fn reflexivity(agent: &Agent, batch: &[AgentInput]) -> Result<f64, MetricError> {
    let (mut gm, mut gs) = (0.0, 0.0);
    for input in batch {
        let pass = agent.forward(input).map_err(|e| MetricError::Agent(e.to_string()))?;
        let g = agent.mean_logit_gradients(&pass);
        gm += g.messages.iter().flatten().map(|x| x.abs()).sum::<f64>();
        gs += g.view.iter().map(|x| x.abs()).sum::<f64>();
    }
    let total = gm + gs;
    Ok(if total > 0.0 { (gm / total).clamp(0.0, 1.0) } else { 0.0 })
}

fn autocorrelation(series: &[f64], lag: usize) -> f64 {
    if lag == 0 {
        return 1.0;
    }
    let n = series.len() - lag;
    let (a, b) = (&series[..n], &series[lag..]);
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 1.0;
    }
    (cov / (va * vb).sqrt()).clamp(-1.0, 1.0)
}

/// Mean over latent dimensions of the lag-`lag` Pearson autocorrelation of
/// `trajectory[tick]`; constant dimensions count as 1.
pub fn temporal_persistence(trajectory: &[Vec<f64>], lag: usize) -> Result<f64, MetricError> {
    if trajectory.is_empty() || trajectory.len() <= lag {
        return Err(MetricError::TooShort {
            len: trajectory.len(),
            lag,
        });
    }
    let dims = trajectory[0].len();
    if dims == 0 {
        return Ok(1.0);
    }
    let total: f64 = (0..dims)
        .map(|k| {
            let series: Vec<f64> = trajectory.iter().map(|v| v[k]).collect();
            autocorrelation(&series, lag)
        })
        .sum();
    Ok(total / dims as f64)
}

/// Mean per-cell `KL(p || q)` in bits between Bernoulli predictions.
pub fn prediction_kl(p: &Prediction, q: &Prediction) -> f64 {
    assert_eq!(p.probs.len(), q.probs.len(), "predictions of different size");
    if p.probs.is_empty() {
        return 0.0;
    }
    let kl = |a: f64, b: f64| {
        let (a, b) = (
            a.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP),
            b.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP),
        );
        a * (a / b).log2() + (1.0 - a) * ((1.0 - a) / (1.0 - b)).log2()
    };
    let total: f64 = p.probs.iter().zip(&q.probs).map(|(&a, &b)| kl(a, b).max(0.0)).sum();
    total / p.probs.len() as f64
}

/// Non-empty proper subsets of `0..n`, as bit masks.
fn proper_subsets(n: usize) -> impl Iterator<Item = usize> {
    1..(1usize << n) - 1
}

fn pick<'a>(mask: usize, items: &[&'a [u32]]) -> Vec<&'a [u32]> {
    items
        .iter()
        .enumerate()
        .filter(|(k, _)| mask >> k & 1 == 1)
        .map(|(_, c)| *c)
        .collect()
}

/// `max(0, I(S; X_all) - max over proper subsets I(S; X_sub))` from samples.
pub fn synergy_weight(target: &[u32], sources: &[&[u32]]) -> f64 {
    if sources.is_empty() {
        return 0.0;
    }
    let whole = mutual_information(target, &joint_codes(sources));
    let best = proper_subsets(sources.len())
        .map(|mask| mutual_information(target, &joint_codes(&pick(mask, sources))))
        .fold(0.0, f64::max);
    (whole - best).max(0.0)
}

/// Same as [`synergy_weight`] on an exact distribution; `target` and
/// `sources` index variables of `pmf`.
pub fn synergy_weight_exact(pmf: &Pmf, target: usize, sources: &[usize]) -> f64 {
    if sources.is_empty() {
        return 0.0;
    }
    let whole = pmf.mutual_information(&[target], sources);
    let best = proper_subsets(sources.len())
        .map(|mask| {
            let sub: Vec<usize> = sources
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &v)| v)
                .collect();
            pmf.mutual_information(&[target], &sub)
        })
        .fold(0.0, f64::max);
    (whole - best).max(0.0)
}

/// Synergy per agent subset about a named substrate target.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SynergyWeights {
    pub target: String,
    pub weights: BTreeMap<Vec<usize>, f64>,
}

/// Subsets of `0..n` of size `2..=k_max` that are connected under
/// `adjacent`, each sorted ascending, in lexicographic order.
pub fn connected_subsets(n: usize, k_max: usize, adjacent: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut found = std::collections::BTreeSet::new();
    let mut layer: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    for _ in 2..=k_max {
        let mut next = std::collections::BTreeSet::new();
        for set in &layer {
            for v in 0..n {
                if !set.contains(&v) && set.iter().any(|&u| adjacent(u, v)) {
                    let mut grown = set.clone();
                    grown.push(v);
                    grown.sort_unstable();
                    next.insert(grown);
                }
            }
        }
        found.extend(next.iter().cloned());
        layer = next.into_iter().collect();
    }
    found.into_iter().collect()
}
