//! Continuous lattice variant of the substrate: overdamped Langevin
//! dynamics under a potential, and trajectory entropy production.
//!
//! One step is the Euler–Maruyama update
//!
//! ```text
//! x' = x - eta * grad U(x) + sqrt(2 * eta / beta) * xi,   xi ~ N(0, 1) per site
//! ```
//!
//! so the one-step transition density is Gaussian with mean `x - eta * grad U(x)`
//! and variance `2 * eta / beta` per site. Entropy production of a trajectory
//! is the log-ratio of its forward and time-reversed path probabilities under
//! that density, in units of k_B (k_B = 1, natural log).
//!
//! Noise for site `i` at tick `t` comes from its own substream
//! `(seed, LangevinNoise, i, t)`, so stepping order does not matter.

use std::io::{self, BufRead, Write};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::fsum;
use crate::rng::{substream, Purpose};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("non-finite gradient {value} at site {site}, tick {tick}")]
    NonFiniteGradient { site: usize, tick: u64, value: f64 },
    #[error("invalid Langevin parameters: {0}")]
    Params(String),
    #[error("trajectory log line {line}: {message}")]
    Log { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub values: Vec<f64>,
    pub tick: u64,
}

impl FieldState {
    pub fn new(values: Vec<f64>) -> Self {
        FieldState { values, tick: 0 }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// A potential over the whole lattice. `tick` lets a potential follow an
/// external protocol; the built-in [`PotentialSpec`] ignores it.
pub trait Potential {
    fn energy(&self, x: &[f64], tick: u64) -> f64;
    fn gradient(&self, x: &[f64], tick: u64, out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PotentialSpec {
    /// `U = k/2 * sum x_i^2`
    Quadratic { stiffness: f64 },
    /// `U = depth * sum (x_i^2 - well^2)^2`
    DoubleWell { depth: f64, well: f64 },
    /// Double well per site plus `coupling/2 * sum (x_i - x_{i+1})^2` on a ring.
    CoupledLattice { depth: f64, well: f64, coupling: f64 },
}

impl PotentialSpec {
    pub fn unit_double_well() -> Self {
        PotentialSpec::DoubleWell { depth: 1.0, well: 1.0 }
    }
}

fn ring_pairs(n: usize) -> usize {
    match n {
        0 | 1 => 0,
        2 => 1,
        n => n,
    }
}

impl Potential for PotentialSpec {
    fn energy(&self, x: &[f64], _tick: u64) -> f64 {
        match *self {
            PotentialSpec::Quadratic { stiffness } => 0.5 * stiffness * x.iter().map(|v| v * v).sum::<f64>(),
            PotentialSpec::DoubleWell { depth, well } => x.iter().map(|v| depth * (v * v - well * well).powi(2)).sum(),
            PotentialSpec::CoupledLattice { depth, well, coupling } => {
                let n = x.len();
                let site: f64 = x.iter().map(|v| depth * (v * v - well * well).powi(2)).sum();
                let bonds: f64 = (0..ring_pairs(n)).map(|i| (x[i] - x[(i + 1) % n]).powi(2)).sum();
                site + 0.5 * coupling * bonds
            }
        }
    }

    fn gradient(&self, x: &[f64], _tick: u64, out: &mut [f64]) {
        match *self {
            PotentialSpec::Quadratic { stiffness } => {
                for (g, v) in out.iter_mut().zip(x) {
                    *g = stiffness * v;
                }
            }
            PotentialSpec::DoubleWell { depth, well } => {
                for (g, v) in out.iter_mut().zip(x) {
                    *g = 4.0 * depth * v * (v * v - well * well);
                }
            }
            PotentialSpec::CoupledLattice { depth, well, coupling } => {
                let n = x.len();
                for (g, v) in out.iter_mut().zip(x) {
                    *g = 4.0 * depth * v * (v * v - well * well);
                }
                for i in 0..ring_pairs(n) {
                    let j = (i + 1) % n;
                    let d = coupling * (x[i] - x[j]);
                    out[i] += d;
                    out[j] -= d;
                }
            }
        }
    }
}

/// A potential whose parameters follow a tick-indexed schedule.
pub struct Scheduled<F: Fn(u64) -> PotentialSpec>(pub F);

impl<F: Fn(u64) -> PotentialSpec> Potential for Scheduled<F> {
    fn energy(&self, x: &[f64], tick: u64) -> f64 {
        (self.0)(tick).energy(x, tick)
    }

    fn gradient(&self, x: &[f64], tick: u64, out: &mut [f64]) {
        (self.0)(tick).gradient(x, tick, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LangevinParams {
    pub eta: f64,
    pub beta: f64,
    pub seed: u64,
    /// Test hook: `false` drops the noise term.
    pub noise: bool,
}

impl LangevinParams {
    pub fn new(eta: f64, beta: f64, seed: u64) -> Result<Self, FieldError> {
        let p = LangevinParams {
            eta,
            beta,
            seed,
            noise: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(FieldError::Params(format!("eta must be > 0, got {}", self.eta)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(FieldError::Params(format!("beta must be > 0, got {}", self.beta)));
        }
        Ok(())
    }

    pub fn noise_scale(&self) -> f64 {
        (2.0 * self.eta / self.beta).sqrt()
    }
}

/// Standard normal draw for `(seed, tick, site)`.
pub fn site_noise(seed: u64, tick: u64, site: usize) -> f64 {
    StandardNormal.sample(&mut substream(seed, Purpose::LangevinNoise, site as u64, tick))
}

/// One Euler–Maruyama step. `eta = 0` is accepted and leaves the field unchanged.
pub fn langevin_step<P: Potential + ?Sized>(
    field: &FieldState,
    pot: &P,
    params: &LangevinParams,
) -> Result<FieldState, FieldError> {
    if !(params.eta >= 0.0 && params.beta > 0.0) {
        return Err(FieldError::Params(format!(
            "need eta >= 0 and beta > 0, got eta = {}, beta = {}",
            params.eta, params.beta
        )));
    }
    let mut grad = vec![0.0; field.values.len()];
    pot.gradient(&field.values, field.tick, &mut grad);
    if let Some((site, &value)) = grad.iter().enumerate().find(|(_, g)| !g.is_finite()) {
        return Err(FieldError::NonFiniteGradient {
            site,
            tick: field.tick,
            value,
        });
    }
    let scale = params.noise_scale();
    let values = field
        .values
        .iter()
        .zip(&grad)
        .enumerate()
        .map(|(site, (x, g))| {
            let kick = if params.noise && params.eta > 0.0 {
                scale * site_noise(params.seed, field.tick, site)
            } else {
                0.0
            };
            x - params.eta * g + kick
        })
        .collect();
    Ok(FieldState {
        values,
        tick: field.tick + 1,
    })
}

/// Runs `steps` Langevin steps and returns the trajectory including the start.
pub fn simulate<P: Potential + ?Sized>(
    start: FieldState,
    pot: &P,
    params: &LangevinParams,
    steps: usize,
) -> Result<Vec<FieldState>, FieldError> {
    let mut traj = Vec::with_capacity(steps + 1);
    traj.push(start);
    for _ in 0..steps {
        let next = langevin_step(traj.last().unwrap(), pot, params)?;
        traj.push(next);
    }
    Ok(traj)
}

fn step_log_ratios<P: Potential + ?Sized>(
    from: &FieldState,
    to: &FieldState,
    pot: &P,
    params: &LangevinParams,
    out: &mut Vec<f64>,
) {
    assert_eq!(
        from.values.len(),
        to.values.len(),
        "trajectory states have mismatched sizes"
    );
    let n = from.values.len();
    let mut g_from = vec![0.0; n];
    let mut g_to = vec![0.0; n];
    // both directions use the protocol value of the forward step
    pot.gradient(&from.values, from.tick, &mut g_from);
    pot.gradient(&to.values, from.tick, &mut g_to);
    let c = params.beta / (4.0 * params.eta);
    for i in 0..n {
        let (x, y) = (from.values[i], to.values[i]);
        let forward = y - x + params.eta * g_from[i];
        let backward = x - y + params.eta * g_to[i];
        out.push(c * (backward * backward) - c * (forward * forward));
    }
}

/// `ln P[traj] / P[reversed traj]` under the Euler–Maruyama transition
/// density, summed over steps and sites.
///
/// Panics on fewer than two states or on states of different sizes.
pub fn entropy_production<P: Potential + ?Sized>(traj: &[FieldState], pot: &P, params: &LangevinParams) -> f64 {
    assert!(traj.len() >= 2, "entropy production needs at least two states");
    params
        .validate()
        .expect("entropy production needs eta > 0 and beta > 0");
    let mut terms = Vec::with_capacity((traj.len() - 1) * traj[0].values.len());
    for pair in traj.windows(2) {
        step_log_ratios(&pair[0], &pair[1], pot, params, &mut terms);
    }
    fsum(terms)
}

/// Reverses a trajectory, keeping the forward tick labels so the reversed
/// path is evaluated under the same protocol.
pub fn time_reversed(traj: &[FieldState]) -> Vec<FieldState> {
    let ticks: Vec<u64> = traj.iter().map(|s| s.tick).collect();
    traj.iter()
        .rev()
        .zip(ticks)
        .map(|(s, tick)| FieldState {
            values: s.values.clone(),
            tick,
        })
        .collect()
}

/// Diagnostic split of the total entropy production.
///
/// `internal` is the change in Shannon entropy (nats) of the histogram of
/// site values between the first and last state, with `bins` equal-width
/// bins spanning the min..max of all values in the trajectory. `external`
/// is the remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    pub total: f64,
    pub internal: f64,
    pub external: f64,
}

pub const DEFAULT_SPLIT_BINS: usize = 16;

fn histogram_entropy(values: &[f64], lo: f64, hi: f64, bins: usize) -> f64 {
    let mut counts = vec![0usize; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        let b = if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[b] += 1;
    }
    let n = values.len() as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

pub fn entropy_report<P: Potential + ?Sized>(
    traj: &[FieldState],
    pot: &P,
    params: &LangevinParams,
    bins: usize,
) -> EntropyReport {
    let total = entropy_production(traj, pot, params);
    let (lo, hi) = traj
        .iter()
        .flat_map(|s| s.values.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let first = histogram_entropy(&traj[0].values, lo, hi, bins.max(1));
    let last = histogram_entropy(&traj[traj.len() - 1].values, lo, hi, bins.max(1));
    let internal = last - first;
    EntropyReport {
        total,
        internal,
        external: total - internal,
    }
}

/// Writes `tick\tsite\tvalue` rows, then the report as `#`-prefixed footer records.
pub fn write_trajectory_tsv<W: Write>(
    mut out: W,
    traj: &[FieldState],
    report: Option<&EntropyReport>,
) -> io::Result<()> {
    writeln!(out, "tick\tsite\tvalue")?;
    for state in traj {
        for (site, v) in state.values.iter().enumerate() {
            writeln!(out, "{}\t{}\t{:?}", state.tick, site, v)?;
        }
    }
    if let Some(r) = report {
        writeln!(out, "#entropy_total\t{:?}", r.total)?;
        writeln!(out, "#entropy_internal\t{:?}", r.internal)?;
        writeln!(out, "#entropy_external\t{:?}", r.external)?;
    }
    Ok(())
}

pub fn read_trajectory_tsv<R: BufRead>(input: R) -> Result<(Vec<FieldState>, Option<EntropyReport>), FieldError> {
    let mut traj: Vec<FieldState> = Vec::new();
    let mut footer = [None; 3];
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let bad = |message: String| FieldError::Log { line: lineno, message };
        if i == 0 {
            if line != "tick\tsite\tvalue" {
                return Err(bad(format!("unexpected header {line:?}")));
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if let Some(key) = cols[0].strip_prefix('#') {
            let slot = match key {
                "entropy_total" => 0,
                "entropy_internal" => 1,
                "entropy_external" => 2,
                other => return Err(bad(format!("unknown footer record {other:?}"))),
            };
            let v = cols
                .get(1)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| bad("bad footer value".into()))?;
            footer[slot] = Some(v);
            continue;
        }
        if cols.len() != 3 {
            return Err(bad(format!("expected 3 columns, got {}", cols.len())));
        }
        let tick: u64 = cols[0].parse().map_err(|_| bad("bad tick".into()))?;
        let site: usize = cols[1].parse().map_err(|_| bad("bad site".into()))?;
        let value: f64 = cols[2].parse().map_err(|_| bad("bad value".into()))?;
        if traj.last().is_none_or(|s| s.tick != tick) {
            traj.push(FieldState {
                values: Vec::new(),
                tick,
            });
        }
        let state = traj.last_mut().unwrap();
        if site != state.values.len() {
            return Err(bad(format!("site {site} out of order")));
        }
        state.values.push(value);
    }
    let report = match footer {
        [Some(total), Some(internal), Some(external)] => Some(EntropyReport {
            total,
            internal,
            external,
        }),
        [None, None, None] => None,
        _ => {
            return Err(FieldError::Log {
                line: 0,
                message: "incomplete entropy footer".into(),
            })
        }
    };
    Ok((traj, report))
}
