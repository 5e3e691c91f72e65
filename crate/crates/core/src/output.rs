//! Result files written into a run directory.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::scenario::{CodebookResult, ScenarioConfig, ScenarioResult, SettingSummary};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Which avoidance settings to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Settings {
    pub on: bool,
    pub off: bool,
}

impl Settings {
    pub const BOTH: Settings = Settings { on: true, off: true };

    fn iter(&self) -> impl Iterator<Item = &'static str> {
        [(self.on, "on"), (self.off, "off")]
            .into_iter()
            .filter_map(|(keep, name)| keep.then_some(name))
    }
}

fn create(dir: &Path, name: &str) -> io::Result<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    let f = File::create(&path)?;
    Ok((path, BufWriter::new(f)))
}

/// `codebook,x,y,power_density_mw_cm2,beam_m,beam_n,d0_applied`
pub fn write_exposure_map<W: Write>(mut out: W, result: &ScenarioResult, setting: &str) -> io::Result<()> {
    writeln!(out, "codebook,x,y,power_density_mw_cm2,beam_m,beam_n,d0_applied")?;
    for cb in &result.codebooks {
        for c in &cb.map {
            let (s, beam) = if setting == "on" {
                (c.exposure_on, c.beam_on)
            } else {
                (c.exposure_off, Some(c.beam_off))
            };
            let (m, n) = beam.map_or((String::new(), String::new()), |b| (b.m.to_string(), b.n.to_string()));
            let d0 = if setting == "on" { c.d0_applied } else { 0.0 };
            writeln!(out, "{},{},{},{},{},{},{}", cb.label, c.x, c.y, s, m, n, d0)?;
        }
    }
    Ok(())
}

fn cdf_rows<W: Write>(out: &mut W, prefix: &str, sorted: &[f64]) -> io::Result<()> {
    let n = sorted.len() as f64;
    for (i, v) in sorted.iter().enumerate() {
        writeln!(out, "{}{},{}", prefix, v, (i + 1) as f64 / n)?;
    }
    Ok(())
}

/// `codebook,avoidance,power_density_mw_cm2,cdf`
pub fn write_exposure_cdf<W: Write>(mut out: W, result: &ScenarioResult, settings: Settings) -> io::Result<()> {
    writeln!(out, "codebook,avoidance,power_density_mw_cm2,cdf")?;
    for cb in &result.codebooks {
        for s in settings.iter() {
            let samples = if s == "on" { &cb.exposure_on } else { &cb.exposure_off };
            cdf_rows(&mut out, &format!("{},{},", cb.label, s), samples)?;
        }
    }
    Ok(())
}

/// `snr_db,cdf`
pub fn write_snr_cdf<W: Write>(mut out: W, cb: &CodebookResult, setting: &str) -> io::Result<()> {
    writeln!(out, "snr_db,cdf")?;
    let samples = if setting == "on" { &cb.snr_on } else { &cb.snr_off };
    cdf_rows(&mut out, "", samples)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodebookSummary {
    pub label: String,
    pub crossover_db: f64,
    pub az_count: usize,
    pub tilt_count: usize,
    pub trigger_rate: f64,
    pub mute_rate: f64,
    pub median_snr_loss_db: f64,
    pub off: SettingSummary,
    pub on: SettingSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub tool_version: String,
    pub seed: u64,
    pub nx: usize,
    pub ny: usize,
    pub trials_per_point: usize,
    pub codebooks: Vec<CodebookSummary>,
    pub config: ScenarioConfig,
}

impl Summary {
    pub fn new(cfg: &ScenarioConfig, result: &ScenarioResult) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            seed: result.seed,
            nx: result.nx,
            ny: result.ny,
            trials_per_point: result.trials_per_point,
            codebooks: result
                .codebooks
                .iter()
                .map(|c| CodebookSummary {
                    label: c.label.clone(),
                    crossover_db: c.crossover_db,
                    az_count: c.az_count,
                    tilt_count: c.tilt_count,
                    trigger_rate: c.trigger_rate,
                    mute_rate: c.mute_rate,
                    median_snr_loss_db: c.median_snr_loss(),
                    off: c.off.clone(),
                    on: c.on.clone(),
                })
                .collect(),
            config: cfg.clone(),
        }
    }
}

/// Provenance record for one run; written before any result file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_path: Option<PathBuf>,
    pub config: ScenarioConfig,
    pub seed: u64,
    pub tool_version: String,
    pub output_dir: PathBuf,
    pub wall_clock_s: Option<f64>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let (_, mut w) = create(dir, "manifest.json")?;
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()
    }
}

/// Writes every result file for `result` into `dir`; returns the file names.
pub fn write_results(
    dir: &Path,
    cfg: &ScenarioConfig,
    result: &ScenarioResult,
    settings: Settings,
) -> io::Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: String, f: &dyn Fn(&mut BufWriter<File>) -> io::Result<()>| -> io::Result<()> {
        let (_, mut w) = create(dir, &name)?;
        f(&mut w)?;
        w.flush()?;
        written.push(name);
        Ok(())
    };
    for s in settings.iter() {
        emit(format!("exposure_map_{s}.csv"), &|w| write_exposure_map(w, result, s))?;
    }
    emit("exposure_cdf.csv".into(), &|w| write_exposure_cdf(w, result, settings))?;
    for cb in &result.codebooks {
        for s in settings.iter() {
            emit(format!("snr_cdf_{}_{}.csv", cb.label, s), &|w| write_snr_cdf(w, cb, s))?;
        }
    }
    let summary = Summary::new(cfg, result);
    emit("summary.json".into(), &|w| {
        serde_json::to_writer_pretty(&mut *w, &summary)?;
        w.write_all(b"\n")
    })?;
    emit("config.toml".into(), &|w| {
        w.write_all(crate::config::to_toml(cfg).as_bytes())
    })?;
    Ok(written)
}
