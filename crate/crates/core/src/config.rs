//! Experiment configuration files.
//!
//! Configs are TOML tables mirroring [`ScenarioConfig`]; every key is optional
//! and falls back to the built-in default. Unknown keys are rejected.
//!
//! ```toml
//! seed = 7
//! pose = "B"
//! trials_per_point = 40
//!
//! [site]
//! mech_downtilt_deg = 45.0
//!
//! [grid]
//! x = [1.0, 6.0]
//! y = [-2.0, 2.0]
//! step = 0.1
//!
//! [[codebooks]]
//! crossover_db = 0.5
//! policy = { bands = [{ max_range = 4.5, d0 = 3.0 }, { max_range = 6.7, d0 = 1.0 }] }
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use crate::scenario::ScenarioConfig;

#[derive(Debug)]
pub enum ConfigError {
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, source } => write!(f, "{}: {}", path.display(), source),
            ConfigError::Parse {
                path,
                line,
                column,
                message,
            } => write!(f, "{}:{}:{}: {}", path.display(), line, column, message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

pub fn parse_config(text: &str, path: &Path) -> Result<ScenarioConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        ConfigError::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path)
}

pub fn to_toml(cfg: &ScenarioConfig) -> String {
    toml::to_string(cfg).expect("scenario config always serializes to TOML")
}
