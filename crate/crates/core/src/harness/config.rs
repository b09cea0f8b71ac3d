//! `[section]` / `key = value` run configuration with line-precise errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::Arch;
use crate::comm::TopologyKind;
use crate::metrics::BinStrategy;

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstrateConfig {
    pub width: usize,
    pub height: usize,
    /// RLE file stamped at `(pattern_x, pattern_y)`; relative paths resolve
    /// against the config file's directory.
    pub pattern: Option<PathBuf>,
    pub pattern_x: usize,
    pub pattern_y: usize,
    /// Fraction of live cells for a random start; used when no pattern is given.
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub tile: usize,
    pub halo: usize,
    pub arch: Arch,
    pub hidden: usize,
    pub latent_dim: usize,
    pub lr: f64,
    pub momentum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommConfig {
    pub enabled: bool,
    pub topology: TopologyKind,
    pub kappa: u32,
    pub vq_rate: f64,
    pub decoder_lr: f64,
    pub codebook_period: u64,
    /// Half-width of the uniform centroid init.
    pub init_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub enabled: bool,
    pub window: usize,
    pub stride: u64,
    pub bins: usize,
    pub strategy: BinStrategy,
    /// Leading latent coordinates used for integration and synergy.
    pub dims: usize,
    pub lags: Vec<usize>,
    pub k_max: usize,
    pub phi_max_agents: usize,
    pub mi_min_samples: usize,
    pub horizon: u64,
    /// Edge whose message is resampled for causal efficacy; defaults to the
    /// first edge of the topology.
    pub efficacy_edge: Option<(usize, usize)>,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub ticks: u64,
    pub seed: u64,
    /// 0 disables snapshots.
    pub snapshot_period: u64,
    pub output_dir: PathBuf,
    /// Also log latents, sent symbols and tile populations every tick.
    pub log_trajectory: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub substrate: SubstrateConfig,
    pub agents: AgentConfig,
    pub comm: CommConfig,
    pub metrics: MetricsConfig,
    pub run: RunConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            substrate: SubstrateConfig {
                width: 32,
                height: 32,
                pattern: None,
                pattern_x: 0,
                pattern_y: 0,
                density: 0.3,
            },
            agents: AgentConfig {
                tile: 4,
                halo: 1,
                arch: Arch::Mlp,
                hidden: 32,
                latent_dim: 32,
                lr: 0.05,
                momentum: 0.0,
            },
            comm: CommConfig {
                enabled: true,
                topology: TopologyKind::Grid { cols: 0, rows: 0 },
                kappa: 4,
                vq_rate: 0.1,
                decoder_lr: 0.05,
                codebook_period: 64,
                init_scale: 0.5,
            },
            metrics: MetricsConfig {
                enabled: true,
                window: 512,
                stride: 64,
                bins: 4,
                strategy: BinStrategy::Quantile,
                dims: 2,
                lags: vec![1, 8],
                k_max: 3,
                phi_max_agents: 8,
                mi_min_samples: 256,
                horizon: 2,
                efficacy_edge: None,
                alpha: -0.05,
            },
            run: RunConfig {
                ticks: 1000,
                seed: 0,
                snapshot_period: 0,
                output_dir: PathBuf::from("out"),
                log_trajectory: false,
            },
        }
    }
}

type Setter = fn(&mut SimConfig, &str) -> Result<(), String>;

fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("invalid number {v:?}"))
}

fn boolean(v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got {v:?}")),
    }
}

fn edge(v: &str) -> Result<Option<(usize, usize)>, String> {
    if v == "auto" {
        return Ok(None);
    }
    let (a, b) = v
        .split_once('>')
        .ok_or_else(|| format!("expected from>to or auto, got {v:?}"))?;
    Ok(Some((num(a.trim())?, num(b.trim())?)))
}

fn arch(v: &str) -> Result<Arch, String> {
    match v {
        "mlp" => Ok(Arch::Mlp),
        _ => match v.strip_prefix("attention") {
            Some("") => Ok(Arch::Attention { embed_dim: 4 }),
            Some(rest) => rest
                .strip_prefix(':')
                .and_then(|d| d.parse().ok())
                .filter(|&d| d > 0)
                .map(|embed_dim| Arch::Attention { embed_dim })
                .ok_or_else(|| format!("expected attention:<embed_dim>, got {v:?}")),
            None => Err(format!("expected mlp or attention[:<embed_dim>], got {v:?}")),
        },
    }
}

fn arch_text(a: &Arch) -> String {
    match a {
        Arch::Mlp => "mlp".into(),
        Arch::Attention { embed_dim } => format!("attention:{embed_dim}"),
    }
}

fn strategy(v: &str) -> Result<BinStrategy, String> {
    match v {
        "uniform" => Ok(BinStrategy::Uniform),
        "quantile" => Ok(BinStrategy::Quantile),
        _ => Err(format!("expected uniform or quantile, got {v:?}")),
    }
}

fn lags(v: &str) -> Result<Vec<usize>, String> {
    v.split(',').map(|s| num(s.trim())).collect()
}

/// Every accepted key with its parser.
fn setters() -> BTreeMap<(&'static str, &'static str), Setter> {
    let mut m: BTreeMap<(&'static str, &'static str), Setter> = BTreeMap::new();
    m.insert(("substrate", "width"), |c, v| {
        c.substrate.width = num(v)?;
        Ok(())
    });
    m.insert(("substrate", "height"), |c, v| {
        c.substrate.height = num(v)?;
        Ok(())
    });
    m.insert(("substrate", "pattern"), |c, v| {
        c.substrate.pattern = Some(PathBuf::from(v));
        Ok(())
    });
    m.insert(("substrate", "pattern_x"), |c, v| {
        c.substrate.pattern_x = num(v)?;
        Ok(())
    });
    m.insert(("substrate", "pattern_y"), |c, v| {
        c.substrate.pattern_y = num(v)?;
        Ok(())
    });
    m.insert(("substrate", "density"), |c, v| {
        c.substrate.density = num(v)?;
        Ok(())
    });
    m.insert(("agents", "tile"), |c, v| {
        c.agents.tile = num(v)?;
        Ok(())
    });
    m.insert(("agents", "halo"), |c, v| {
        c.agents.halo = num(v)?;
        Ok(())
    });
    m.insert(("agents", "arch"), |c, v| {
        c.agents.arch = arch(v)?;
        Ok(())
    });
    m.insert(("agents", "hidden"), |c, v| {
        c.agents.hidden = num(v)?;
        Ok(())
    });
    m.insert(("agents", "latent_dim"), |c, v| {
        c.agents.latent_dim = num(v)?;
        Ok(())
    });
    m.insert(("agents", "lr"), |c, v| {
        c.agents.lr = num(v)?;
        Ok(())
    });
    m.insert(("agents", "momentum"), |c, v| {
        c.agents.momentum = num(v)?;
        Ok(())
    });
    m.insert(("comm", "enabled"), |c, v| {
        c.comm.enabled = boolean(v)?;
        Ok(())
    });
    m.insert(("comm", "topology"), |c, v| {
        c.comm.topology = v.parse()?;
        Ok(())
    });
    m.insert(("comm", "kappa"), |c, v| {
        c.comm.kappa = num(v)?;
        Ok(())
    });
    m.insert(("comm", "vq_rate"), |c, v| {
        c.comm.vq_rate = num(v)?;
        Ok(())
    });
    m.insert(("comm", "decoder_lr"), |c, v| {
        c.comm.decoder_lr = num(v)?;
        Ok(())
    });
    m.insert(("comm", "codebook_period"), |c, v| {
        c.comm.codebook_period = num(v)?;
        Ok(())
    });
    m.insert(("comm", "init_scale"), |c, v| {
        c.comm.init_scale = num(v)?;
        Ok(())
    });
    m.insert(("metrics", "enabled"), |c, v| {
        c.metrics.enabled = boolean(v)?;
        Ok(())
    });
    m.insert(("metrics", "window"), |c, v| {
        c.metrics.window = num(v)?;
        Ok(())
    });
    m.insert(("metrics", "stride"), |c, v| {
        c.metrics.stride = num(v)?;
        Ok(())
    });
    m.insert(("metrics", "bins"), |c, v| {
        c.metrics.bins = num(v)?;
        Ok(())
    });
    m.insert(("metrics", "strategy"), |c, v| {
        c.metrics.strategy = strategy(v)?;
        Ok(())
    });
    m.insert(("metrics", "dims"), |c, v| {
        c.metrics.dims = num(v)?;
        Ok(())
    });
    m.insert(("metrics", "lags"), |c, v| {
        c.metrics.lags = lags(v)?;
        Ok(())
    });
    m.insert(("metrics", "k_max"), |c, v| {
        c.metrics.k_max = num(v)?;
        Ok(())
    });
    m.insert(("metrics", "phi_max_agents"), |c, v| {
        c.metrics.phi_max_agents = num(v)?;
        Ok(())
    });
    m.insert(("metrics", "mi_min_samples"), |c, v| {
        c.metrics.mi_min_samples = num(v)?;
        Ok(())
    });
    m.insert(("metrics", "horizon"), |c, v| {
        c.metrics.horizon = num(v)?;
        Ok(())
    });
    m.insert(("metrics", "efficacy_edge"), |c, v| {
        c.metrics.efficacy_edge = edge(v)?;
        Ok(())
    });
    m.insert(("metrics", "alpha"), |c, v| {
        c.metrics.alpha = num(v)?;
        Ok(())
    });
    m.insert(("run", "ticks"), |c, v| {
        c.run.ticks = num(v)?;
        Ok(())
    });
    m.insert(("run", "seed"), |c, v| {
        c.run.seed = num(v)?;
        Ok(())
    });
    m.insert(("run", "snapshot_period"), |c, v| {
        c.run.snapshot_period = num(v)?;
        Ok(())
    });
    m.insert(("run", "output_dir"), |c, v| {
        c.run.output_dir = PathBuf::from(v);
        Ok(())
    });
    m.insert(("run", "log_trajectory"), |c, v| {
        c.run.log_trajectory = boolean(v)?;
        Ok(())
    });
    m
}

/// Configuration error; `line` is 0 when no single line is at fault.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}", self.line, self.message)
        } else {
            f.write_str(&self.message)
        }
    }
}

impl SimConfig {
    /// Parses config text over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let setters = setters();
        let mut cfg = SimConfig::default();
        let mut section: Option<String> = None;
        let mut seen: BTreeMap<(String, String), usize> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let err = |message: String| ConfigError { line: line_no, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("unterminated section header {line:?}")))?
                    .trim();
                if !setters.keys().any(|(s, _)| *s == name) {
                    return Err(err(format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section
                .as_deref()
                .ok_or_else(|| err(format!("key {key:?} outside any section")))?;
            let setter = setters
                .iter()
                .find(|((s, k), _)| *s == sec && *k == key)
                .map(|(_, f)| f)
                .ok_or_else(|| err(format!("unknown key {key:?} in [{sec}]")))?;
            if let Some(prev) = seen.insert((sec.to_string(), key.to_string()), line_no) {
                return Err(err(format!("duplicate key {key:?} (first set on line {prev})")));
            }
            setter(&mut cfg, value).map_err(|m| err(format!("{sec}.{key}: {m}")))?;
        }
        let line_of = |sec: &str, key: &str| seen.get(&(sec.to_string(), key.to_string())).copied().unwrap_or(0);
        cfg.validate().map_err(|(sec, key, message)| ConfigError {
            line: line_of(sec, key),
            message: format!("{sec}.{key}: {message}"),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut cfg = Self::parse(&text).map_err(|e| HarnessError::Config {
            path: path.to_path_buf(),
            error: e,
        })?;
        if let Some(p) = &cfg.substrate.pattern {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new(""));
                cfg.substrate.pattern = Some(base.join(p));
            }
        }
        Ok(cfg)
    }

    /// Checks ranges and cross-field constraints; the error names the
    /// offending `(section, key)`.
    pub fn validate(&self) -> Result<(), (&'static str, &'static str, String)> {
        let s = &self.substrate;
        let a = &self.agents;
        let c = &self.comm;
        let m = &self.metrics;
        let fail = |sec, key, msg: &str| Err((sec, key, msg.to_string()));
        if s.width == 0 || s.height == 0 {
            return fail("substrate", "width", "grid must be non-empty");
        }
        if !(0.0..=1.0).contains(&s.density) {
            return fail("substrate", "density", "must lie in [0, 1]");
        }
        if a.tile == 0 || !s.width.is_multiple_of(a.tile) || !s.height.is_multiple_of(a.tile) {
            return fail("agents", "tile", "must divide both grid dimensions");
        }
        if a.hidden == 0 || a.latent_dim == 0 {
            return fail("agents", "latent_dim", "layer widths must be positive");
        }
        if !(a.lr >= 0.0 && a.lr.is_finite()) {
            return fail("agents", "lr", "must be a finite non-negative number");
        }
        if !(0.0..1.0).contains(&a.momentum) {
            return fail("agents", "momentum", "must lie in [0, 1)");
        }
        if !(1..=16).contains(&c.kappa) {
            return fail("comm", "kappa", "must lie in 1..=16");
        }
        if !(c.vq_rate >= 0.0 && c.vq_rate <= 1.0) {
            return fail("comm", "vq_rate", "must lie in [0, 1]");
        }
        if !(c.decoder_lr >= 0.0 && c.decoder_lr.is_finite()) {
            return fail("comm", "decoder_lr", "must be a finite non-negative number");
        }
        if c.codebook_period == 0 {
            return fail("comm", "codebook_period", "must be positive");
        }
        if m.window == 0 || m.stride == 0 {
            return fail("metrics", "window", "window and stride must be positive");
        }
        if m.bins < 2 {
            return fail("metrics", "bins", "need at least 2 bins");
        }
        if m.dims == 0 {
            return fail("metrics", "dims", "must be positive");
        }
        if m.k_max < 2 {
            return fail("metrics", "k_max", "must be at least 2");
        }
        if m.phi_max_agents == 0 {
            return fail("metrics", "phi_max_agents", "must be positive");
        }
        if m.horizon == 0 {
            return fail("metrics", "horizon", "must be positive");
        }
        if m.lags.iter().any(|&l| l >= m.window) {
            return fail("metrics", "lags", "every lag must be shorter than the window");
        }
        Ok(())
    }

    pub fn n_agents(&self) -> usize {
        (self.substrate.width / self.agents.tile) * (self.substrate.height / self.agents.tile)
    }

    /// Topology with grid dimensions filled in from the tiling.
    pub fn topology_kind(&self) -> TopologyKind {
        match self.comm.topology {
            TopologyKind::Grid { .. } => TopologyKind::Grid {
                cols: self.substrate.width / self.agents.tile,
                rows: self.substrate.height / self.agents.tile,
            },
            ref other => other.clone(),
        }
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let s = &self.substrate;
        let a = &self.agents;
        let c = &self.comm;
        let m = &self.metrics;
        let r = &self.run;
        let mut out = String::new();
        let _ = writeln!(out, "[substrate]\nwidth = {}\nheight = {}", s.width, s.height);
        if let Some(p) = &s.pattern {
            let _ = writeln!(out, "pattern = {}", p.display());
        }
        let _ = writeln!(
            out,
            "pattern_x = {}\npattern_y = {}\ndensity = {}\n",
            s.pattern_x, s.pattern_y, s.density
        );
        let _ = writeln!(
            out,
            "[agents]\ntile = {}\nhalo = {}\narch = {}\nhidden = {}\nlatent_dim = {}\nlr = {}\nmomentum = {}\n",
            a.tile,
            a.halo,
            arch_text(&a.arch),
            a.hidden,
            a.latent_dim,
            a.lr,
            a.momentum
        );
        let _ = writeln!(
            out,
            "[comm]\nenabled = {}\ntopology = {}\nkappa = {}\nvq_rate = {}\ndecoder_lr = {}\ncodebook_period = {}\ninit_scale = {}\n",
            c.enabled, c.topology, c.kappa, c.vq_rate, c.decoder_lr, c.codebook_period, c.init_scale
        );
        let lags: Vec<String> = m.lags.iter().map(|l| l.to_string()).collect();
        let edge = m.efficacy_edge.map_or("auto".to_string(), |(i, j)| format!("{i}>{j}"));
        let strategy = match m.strategy {
            BinStrategy::Uniform => "uniform",
            BinStrategy::Quantile => "quantile",
        };
        let _ = writeln!(
            out,
            "[metrics]\nenabled = {}\nwindow = {}\nstride = {}\nbins = {}\nstrategy = {}\ndims = {}\nlags = {}\nk_max = {}\nphi_max_agents = {}\nmi_min_samples = {}\nhorizon = {}\nefficacy_edge = {}\nalpha = {}\n",
            m.enabled,
            m.window,
            m.stride,
            m.bins,
            strategy,
            m.dims,
            lags.join(","),
            m.k_max,
            m.phi_max_agents,
            m.mi_min_samples,
            m.horizon,
            edge,
            m.alpha
        );
        let _ = write!(
            out,
            "[run]\nticks = {}\nseed = {}\nsnapshot_period = {}\noutput_dir = {}\nlog_trajectory = {}\n",
            r.ticks,
            r.seed,
            r.snapshot_period,
            r.output_dir.display(),
            r.log_trajectory
        );
        out
    }

    /// SHA-256 of the canonical text, excluding the run length and output
    /// directory, which do not affect the simulated trajectory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.run.ticks = 0;
        c.run.output_dir = PathBuf::new();
        let digest = Sha256::digest(c.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
