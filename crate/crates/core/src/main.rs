use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use collective_core::harness::{self, load_snapshot, HarnessError, OfflineRecord, SimConfig};
use collective_core::substrate::{parse_rle, render_rows, space_time, step_life, ElementaryRule, Grid};

const OUTPUT_DIR_ENV: &str = "COLLECTIVE_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "collective",
    version,
    about = "Predictive agents on a cellular-automaton substrate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured simulation, writing logs and snapshots.
    Run {
        config: PathBuf,
        /// Continue from the latest snapshot in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Evolve a Life pattern, or an elementary rule from a single seed.
    Substrate {
        /// RLE pattern file (Life mode).
        pattern: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        ticks: u64,
        /// Print every frame instead of only the last one.
        #[arg(long)]
        render: bool,
        /// Elementary rule number; switches to the 1D automaton.
        #[arg(long)]
        rule: Option<u8>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
    },
    /// Recompute integration and persistence from trajectory logs.
    Metrics { logdir: PathBuf },
    /// Barcode and coherence index of the synergy complex.
    Topology {
        logdir: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        /// Logged tick to analyse (default: the last one).
        #[arg(long)]
        tick: Option<u64>,
    },
    /// Summarize a snapshot.
    Inspect { snapshot: PathBuf },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config { .. } | HarnessError::Pattern { .. } | HarnessError::Invalid(_) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    match command {
        Command::Run { config, resume } => run(&config, resume, &mut out),
        Command::Substrate {
            pattern,
            ticks,
            render,
            rule,
            width,
            height,
        } => match rule {
            Some(rule) => {
                let rows = space_time(&ElementaryRule::new(rule), width.unwrap_or(1), ticks as usize);
                write!(out, "{}", render_rows(&rows)).map_err(runtime)
            }
            None => {
                let path = pattern
                    .ok_or_else(|| Failure::Config("a pattern file is required unless --rule is given".into()))?;
                life(&path, ticks, render, width, height, &mut out)
            }
        },
        Command::Metrics { logdir } => {
            let (cfg, records) = harness::recompute_metrics(&logdir)?;
            writeln!(out, "{}", OfflineRecord::header(&cfg.metrics.lags)).map_err(runtime)?;
            for r in records {
                writeln!(out, "{}", r.to_row()).map_err(runtime)?;
            }
            Ok(())
        }
        Command::Topology { logdir, alpha, tick } => {
            let (tick, barcode) = harness::topology_report(&logdir, tick)?;
            barcode.write_tsv(&mut out).map_err(runtime)?;
            writeln!(
                out,
                "# tick {tick} alpha {alpha} coherence {}",
                barcode.coherence(alpha)
            )
            .map_err(runtime)
        }
        Command::Inspect { snapshot } => {
            let world = load_snapshot(&snapshot)?;
            let cfg = &world.config;
            let lines = [
                format!("tick\t{}", world.tick_count()),
                format!("grid\t{}x{}", world.grid.width(), world.grid.height()),
                format!("population\t{}", world.grid.population()),
                format!("agents\t{}", world.agents.len()),
                format!("tile\t{}", cfg.agents.tile),
                format!("comm\t{}", cfg.comm.enabled),
                format!("topology\t{}", world.topology.kind),
                format!("kappa\t{}", cfg.comm.kappa),
                format!("pending_messages\t{}", world.pending.edges.len()),
                format!("history\t{}", world.history.len()),
                format!("config_hash\t{}", cfg.hash()),
            ];
            for l in lines {
                writeln!(out, "{l}").map_err(runtime)?;
            }
            Ok(())
        }
    }
}

fn run(path: &Path, resume: bool, out: &mut impl Write) -> Result<(), Failure> {
    let mut config = SimConfig::load(path).map_err(|e| match e {
        HarnessError::Io { .. } => Failure::Config(e.to_string()),
        other => other.into(),
    })?;
    if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
        config.run.output_dir = PathBuf::from(dir);
    }
    let manifest = harness::run(&config, resume)?;
    writeln!(
        out,
        "ticks {}..{} written to {}",
        manifest.start_tick,
        manifest.end_tick,
        config.run.output_dir.display()
    )
    .map_err(runtime)
}

fn life(
    path: &Path,
    ticks: u64,
    render: bool,
    width: Option<usize>,
    height: Option<usize>,
    out: &mut impl Write,
) -> Result<(), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let pattern = parse_rle(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let margin = (ticks / 4) as usize + 2;
    let w = width.unwrap_or(pattern.width + 2 * margin);
    let h = height.unwrap_or(pattern.height + 2 * margin);
    if w < pattern.width || h < pattern.height {
        return Err(Failure::Config(format!(
            "{w}x{h} grid is smaller than the {}x{} pattern",
            pattern.width, pattern.height
        )));
    }
    let mut grid = Grid::new(w, h);
    grid.stamp(&pattern.cells_vec(), (w - pattern.width) / 2, (h - pattern.height) / 2);
    let frame = |g: &Grid, out: &mut dyn Write| -> io::Result<()> {
        writeln!(out, "!tick {}", g.tick())?;
        write!(out, "{}", g.to_plaintext())
    };
    if render {
        frame(&grid, out).map_err(runtime)?;
    }
    for _ in 0..ticks {
        grid = step_life(&grid);
        if render {
            frame(&grid, out).map_err(runtime)?;
        }
    }
    if !render {
        frame(&grid, out).map_err(runtime)?;
    }
    Ok(())
}
