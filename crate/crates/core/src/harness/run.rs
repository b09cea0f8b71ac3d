//! Running a configured simulation: logs, snapshots, resume and manifest.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::SimConfig;
use super::world::{TickReport, World};
use super::HarnessError;
use crate::metrics::MetricsRecord;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SNAPSHOT_FORMAT: &str = "collective-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

pub const SIM_HEADER: &str = "tick\tpopulation\tmean_loss\tboundary_loss\tinterior_loss\tskipped";
pub const CHANNELS_HEADER: &str = "tick\tfrom\tto\tgamma_bits";
pub const SYNERGY_HEADER: &str = "tick\tsubset\tweight_bits";
pub const LATENTS_HEADER: &str = "tick\tagent\tlatent";
pub const MESSAGES_HEADER: &str = "tick\tfrom\tto\tsymbol";
pub const TILES_HEADER: &str = "tick\tagent\tlive";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub start_tick: u64,
    pub end_tick: u64,
    pub metrics_columns: Option<String>,
    pub files: Vec<FileEntry>,
    /// Set when the run stopped on an error.
    pub partial: bool,
    pub error: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Snapshot {
    format: String,
    version: u32,
    config_hash: String,
    world: World,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Which ticks a log's rows carry: the tick after the step, or the tick of
/// the state that produced the row.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Stamp {
    After,
    Before,
}

struct Log {
    name: &'static str,
    header: String,
    stamp: Stamp,
}

fn log_specs(cfg: &SimConfig) -> Vec<Log> {
    let mut logs = vec![Log {
        name: "sim.tsv",
        header: SIM_HEADER.into(),
        stamp: Stamp::After,
    }];
    if cfg.metrics.enabled {
        logs.push(Log {
            name: "metrics.tsv",
            header: MetricsRecord::header(&cfg.metrics.lags),
            stamp: Stamp::After,
        });
        logs.push(Log {
            name: "synergy.tsv",
            header: SYNERGY_HEADER.into(),
            stamp: Stamp::After,
        });
        if cfg.comm.enabled {
            logs.push(Log {
                name: "channels.tsv",
                header: CHANNELS_HEADER.into(),
                stamp: Stamp::After,
            });
        }
    }
    if cfg.run.log_trajectory {
        logs.push(Log {
            name: "latents.tsv",
            header: LATENTS_HEADER.into(),
            stamp: Stamp::Before,
        });
        logs.push(Log {
            name: "tiles.tsv",
            header: TILES_HEADER.into(),
            stamp: Stamp::Before,
        });
        if cfg.comm.enabled {
            logs.push(Log {
                name: "messages.tsv",
                header: MESSAGES_HEADER.into(),
                stamp: Stamp::Before,
            });
        }
    }
    logs
}

struct Writers {
    dir: PathBuf,
    files: Vec<(&'static str, BufWriter<File>)>,
}

impl Writers {
    fn get(&mut self, name: &str) -> Option<&mut BufWriter<File>> {
        self.files.iter_mut().find(|(n, _)| *n == name).map(|(_, w)| w)
    }

    fn line(&mut self, name: &str, text: &str) -> Result<(), HarnessError> {
        let path = self.dir.join(name);
        if let Some(w) = self.get(name) {
            writeln!(w, "{text}").map_err(io_err(&path))?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<(), HarnessError> {
        for (name, w) in &mut self.files {
            w.flush().map_err(io_err(&self.dir.join(*name)))?;
        }
        Ok(())
    }

    fn record(&mut self, r: &TickReport) -> Result<(), HarnessError> {
        self.line(
            "sim.tsv",
            &format!(
                "{}\t{}\t{}\t{}\t{}\t{}",
                r.tick,
                r.population,
                r.mean_loss,
                r.boundary_loss,
                r.interior_loss,
                r.diagnostics.len()
            ),
        )?;
        if let Some(m) = &r.metrics {
            self.line("metrics.tsv", &m.record.to_row())?;
            for (subset, w) in &m.synergy.weights {
                let s: Vec<String> = subset.iter().map(|v| v.to_string()).collect();
                self.line("synergy.tsv", &format!("{}\t{}\t{}", r.tick, s.join(","), w))?;
            }
            if let Some(g) = &m.channels {
                for &(i, j) in &g.edges {
                    self.line("channels.tsv", &format!("{}\t{}\t{}\t{}", r.tick, i, j, g.gamma[i][j]))?;
                }
            }
        }
        if self.get("latents.tsv").is_some() {
            let s = &r.sample;
            for (a, l) in s.latents.iter().enumerate() {
                let v: Vec<String> = l.iter().map(|x| x.to_string()).collect();
                self.line("latents.tsv", &format!("{}\t{}\t{}", s.tick, a, v.join(",")))?;
            }
            for (a, live) in s.live.iter().enumerate() {
                self.line("tiles.tsv", &format!("{}\t{}\t{}", s.tick, a, live))?;
            }
            for &(i, j, m) in &r.frame.edges {
                self.line("messages.tsv", &format!("{}\t{}\t{}\t{}", s.tick, i, j, m))?;
            }
        }
        Ok(())
    }
}

fn open_fresh(dir: &Path, cfg: &SimConfig) -> Result<Writers, HarnessError> {
    let mut files = Vec::new();
    for log in log_specs(cfg) {
        let path = dir.join(log.name);
        let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
        writeln!(w, "{}", log.header).map_err(io_err(&path))?;
        files.push((log.name, w));
    }
    Ok(Writers {
        dir: dir.to_path_buf(),
        files,
    })
}

/// Reopens logs for appending after dropping rows past the snapshot tick.
fn open_resumed(dir: &Path, cfg: &SimConfig, tick: u64) -> Result<Writers, HarnessError> {
    let mut files = Vec::new();
    for log in log_specs(cfg) {
        let path = dir.join(log.name);
        let reader = BufReader::new(File::open(&path).map_err(io_err(&path))?);
        let mut kept = String::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(io_err(&path))?;
            if n == 0 {
                if line != log.header {
                    return Err(HarnessError::Snapshot {
                        path: path.clone(),
                        message: "log header differs from the current schema".into(),
                    });
                }
            } else {
                let row_tick: u64 =
                    line.split('\t')
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| HarnessError::Snapshot {
                            path: path.clone(),
                            message: format!("line {}: no tick column", n + 1),
                        })?;
                let keep = match log.stamp {
                    Stamp::After => row_tick <= tick,
                    Stamp::Before => row_tick < tick,
                };
                if !keep {
                    continue;
                }
            }
            kept.push_str(&line);
            kept.push('\n');
        }
        fs::write(&path, kept).map_err(io_err(&path))?;
        let f = OpenOptions::new().append(true).open(&path).map_err(io_err(&path))?;
        files.push((log.name, BufWriter::new(f)));
    }
    Ok(Writers {
        dir: dir.to_path_buf(),
        files,
    })
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn snapshot_name(tick: u64) -> String {
    format!("snapshot-{tick:08}.json")
}

pub fn snapshot_bytes(world: &World) -> Result<Vec<u8>, HarnessError> {
    let snap = Snapshot {
        format: SNAPSHOT_FORMAT.into(),
        version: SNAPSHOT_VERSION,
        config_hash: world.config.hash(),
        world: world.clone(),
    };
    serde_json::to_vec(&snap).map_err(|e| HarnessError::Invalid(e.to_string()))
}

pub fn save_snapshot(world: &World, path: &Path) -> Result<(), HarnessError> {
    write_atomic(path, &snapshot_bytes(world)?)
}

pub fn load_snapshot(path: &Path) -> Result<World, HarnessError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let bad = |message: String| HarnessError::Snapshot {
        path: path.to_path_buf(),
        message,
    };
    let snap: Snapshot = serde_json::from_slice(&bytes).map_err(|e| bad(e.to_string()))?;
    if snap.format != SNAPSHOT_FORMAT || snap.version != SNAPSHOT_VERSION {
        return Err(bad(format!("unsupported snapshot {} v{}", snap.format, snap.version)));
    }
    if snap.config_hash != snap.world.config.hash() {
        return Err(bad("config hash does not match the embedded config".into()));
    }
    Ok(snap.world)
}

/// Most recent snapshot in `dir`, if any.
pub fn latest_snapshot(dir: &Path) -> Result<Option<PathBuf>, HarnessError> {
    let mut best: Option<(u64, PathBuf)> = None;
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let tick = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix("snapshot-")?.strip_suffix(".json")?.parse::<u64>().ok());
        if let Some(t) = tick {
            if best.as_ref().is_none_or(|(b, _)| t > *b) {
                best = Some((t, path));
            }
        }
    }
    Ok(best.map(|(_, p)| p))
}

fn inventory(dir: &Path, cfg: &SimConfig) -> Result<Vec<FileEntry>, HarnessError> {
    log_specs(cfg)
        .into_iter()
        .map(|log| {
            let path = dir.join(log.name);
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            Ok(FileEntry {
                name: log.name.into(),
                bytes: bytes.len() as u64,
                sha256: Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect(),
            })
        })
        .collect()
}

/// Runs `config` from scratch, or from the latest snapshot in the output
/// directory when `resume` is set, up to `config.run.ticks`.
pub fn run(config: &SimConfig, resume: bool) -> Result<RunManifest, HarnessError> {
    let dir = config.run.output_dir.clone();
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    write_atomic(&dir.join(super::CONFIG_FILE), config.to_text().as_bytes())?;
    let (mut world, mut logs) = match resume.then(|| latest_snapshot(&dir)).transpose()?.flatten() {
        Some(path) => {
            let mut world = load_snapshot(&path)?;
            if world.config.hash() != config.hash() {
                return Err(HarnessError::Snapshot {
                    path,
                    message: "snapshot was written by a different configuration".into(),
                });
            }
            world.config = config.clone();
            let logs = open_resumed(&dir, config, world.tick_count())?;
            (world, logs)
        }
        None => {
            let world = World::new(config.clone())?;
            let logs = open_fresh(&dir, config)?;
            (world, logs)
        }
    };
    let start_tick = world.tick_count();
    let mut failure = None;
    while world.tick_count() < config.run.ticks {
        let report = match world.tick() {
            Ok(r) => r,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        logs.record(&report)?;
        let p = config.run.snapshot_period;
        if p > 0 && report.tick % p == 0 {
            logs.flush()?;
            save_snapshot(&world, &dir.join(snapshot_name(report.tick)))?;
        }
    }
    logs.flush()?;
    drop(logs);
    let manifest = RunManifest {
        artifact_version: ARTIFACT_VERSION.into(),
        config_hash: config.hash(),
        seed: config.run.seed,
        start_tick,
        end_tick: world.tick_count(),
        metrics_columns: config
            .metrics
            .enabled
            .then(|| MetricsRecord::header(&config.metrics.lags)),
        files: inventory(&dir, config)?,
        partial: failure.is_some(),
        error: failure.as_ref().map(|e| e.to_string()),
    };
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| HarnessError::Invalid(e.to_string()))?;
    write_atomic(&dir.join(MANIFEST_FILE), &json)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}
