//! Command-line front end: `run`, `codebook` and `render`.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::codebook::build_codebook_with;
use crate::config::{load_config, ConfigError};
use crate::error::Error;
use crate::output::{write_results, RunManifest, Settings, TOOL_VERSION};
use crate::render::render_dir;
use crate::scenario::{run_scenario_with_workers, CodebookSpec, PoseKind, ScenarioConfig};

/// Environment variable naming the default root for run directories.
pub const OUT_ROOT_ENV: &str = "BEAMGUARD_OUT_ROOT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NEAR_FIELD: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "beamguard",
    version,
    about = "Exposure-aware mmWave beam selection simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CodebookChoice {
    #[value(name = "3db")]
    ThreeDb,
    #[value(name = "0.5db")]
    HalfDb,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AvoidanceChoice {
    On,
    Off,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the Monte-Carlo scenario and write CSV/JSON results.
    Run {
        /// TOML config; built-in defaults when omitted.
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory [default: $BEAMGUARD_OUT_ROOT/seed-<seed> or runs/seed-<seed>]
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_pose)]
        pose: Option<PoseKind>,
        #[arg(long, value_enum, default_value = "both")]
        codebook: CodebookChoice,
        #[arg(long, value_enum, default_value = "both")]
        avoidance: AvoidanceChoice,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Dump a codebook as CSV.
    Codebook {
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 3.0)]
        crossover: f64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render every CSV in a result directory as SVG.
    Render { dir: PathBuf },
}

fn parse_pose(s: &str) -> Result<PoseKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Model(Error),
    Io(PathBuf, io::Error),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Model(Error::NearField { .. }) => EXIT_NEAR_FIELD,
            _ => EXIT_CONFIG,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => f.write_str(m),
            Failure::Model(e) => write!(f, "{e}"),
            Failure::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn load(path: Option<&Path>) -> Result<ScenarioConfig, Failure> {
    match path {
        Some(p) => Ok(load_config(p)?),
        None => Ok(ScenarioConfig::default()),
    }
}

fn default_out_dir(seed: u64) -> PathBuf {
    let root = std::env::var_os(OUT_ROOT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"));
    root.join(format!("seed-{seed}"))
}

fn select_codebooks(cfg: &mut ScenarioConfig, choice: CodebookChoice) {
    let wanted: &[f64] = match choice {
        CodebookChoice::ThreeDb => &[3.0],
        CodebookChoice::HalfDb => &[0.5],
        CodebookChoice::Both => return,
    };
    let mut kept: Vec<CodebookSpec> = cfg
        .codebooks
        .iter()
        .filter(|c| wanted.contains(&c.crossover_db))
        .cloned()
        .collect();
    if kept.is_empty() {
        kept = wanted.iter().map(|&x| CodebookSpec::new(x)).collect();
    }
    cfg.codebooks = kept;
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    pose: Option<PoseKind>,
    codebook: CodebookChoice,
    avoidance: AvoidanceChoice,
    workers: usize,
) -> Result<(), Failure> {
    let mut cfg = load(config.as_deref())?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(p) = pose {
        cfg.pose = p;
    }
    select_codebooks(&mut cfg, codebook);
    // reject bad geometry before anything touches the filesystem
    cfg.validate().map_err(Failure::Model)?;

    let settings = match avoidance {
        AvoidanceChoice::On => Settings { on: true, off: false },
        AvoidanceChoice::Off => Settings { on: false, off: true },
        AvoidanceChoice::Both => Settings::BOTH,
    };
    let dir = out.unwrap_or_else(|| default_out_dir(cfg.seed));
    fs::create_dir_all(&dir).map_err(|e| Failure::Io(dir.clone(), e))?;
    let mut manifest = RunManifest {
        config_path: config,
        config: cfg.clone(),
        seed: cfg.seed,
        tool_version: TOOL_VERSION.to_string(),
        output_dir: dir.clone(),
        wall_clock_s: None,
        outputs: Vec::new(),
    };
    manifest.write(&dir).map_err(|e| Failure::Io(dir.clone(), e))?;

    let start = Instant::now();
    let result = run_scenario_with_workers(&cfg, workers).map_err(Failure::Model)?;
    manifest.outputs = write_results(&dir, &cfg, &result, settings).map_err(|e| Failure::Io(dir.clone(), e))?;
    manifest.wall_clock_s = Some(start.elapsed().as_secs_f64());
    manifest.write(&dir).map_err(|e| Failure::Io(dir.clone(), e))?;

    for cb in &result.codebooks {
        eprintln!(
            "{:>6}: {}x{} beams, p95 exposure off {:.4} on {:.4} mW/cm2, median SNR off {:.2} on {:.2} dB, triggered {:.1}%",
            cb.label,
            cb.az_count,
            cb.tilt_count,
            cb.off.exposure.p95,
            cb.on.exposure.p95,
            cb.off.snr.p50,
            cb.on.snr.p50,
            100.0 * cb.trigger_rate
        );
    }
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn cmd_codebook(config: Option<PathBuf>, crossover: f64, out: Option<PathBuf>) -> Result<(), Failure> {
    let cfg = load(config.as_deref())?;
    let cb = build_codebook_with(&cfg.array, &cfg.sector, crossover, cfg.granularity).map_err(Failure::Model)?;
    match out {
        Some(path) => {
            let f = File::create(&path).map_err(|e| Failure::Io(path.clone(), e))?;
            let mut w = BufWriter::new(f);
            cb.write_csv(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| Failure::Io(path.clone(), e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            cb.write_csv(&mut w).map_err(|e| Failure::Io("<stdout>".into(), e))
        }
    }
}

fn cmd_render(dir: &Path) -> Result<(), Failure> {
    let written = render_dir(dir).map_err(|e| Failure::Config(e.to_string()))?;
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

/// Parses `args` and executes the command; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            pose,
            codebook,
            avoidance,
            workers,
        } => cmd_run(config, seed, out, pose, codebook, avoidance, workers),
        Command::Codebook { config, crossover, out } => cmd_codebook(config, crossover, out),
        Command::Render { dir } => cmd_render(&dir),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {f}");
            f.code()
        }
    }
}
