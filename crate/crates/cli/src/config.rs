//! Run configuration from flags and an optional JSON file.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use spaceform::mesh::MAX_LEVEL;
use spaceform::{AnnulusSpec, SpaceForm};

/// Flags shared by every subcommand. The same keys may be given in a JSON
/// file via `--config`; flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, clap::Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunArgs {
    #[arg(long, value_parser = ["sph", "hyp", "euc"])]
    pub geom: Option<String>,
    #[arg(long)]
    pub r0: Option<f64>,
    #[arg(long)]
    pub r1: Option<f64>,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "t_grid")]
    pub t: Option<f64>,
    /// Offsets `A:B:S`, i.e. A, A+S, … up to B.
    #[arg(long = "t-grid", allow_hyphen_values = true)]
    #[serde(rename = "t-grid")]
    pub t_grid: Option<String>,
    /// Refinement level.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub level: Option<u32>,
    /// Finite-difference step.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with any of the keys above.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

impl RunArgs {
    /// Reads the `--config` file, if any, and overlays the flags on it.
    pub fn merged(self) -> Result<RunArgs, ConfigError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = read_file(&path)?;
        let flags_set_offset = self.t.is_some() || self.t_grid.is_some();
        Ok(RunArgs {
            geom: self.geom.or(file.geom),
            r0: self.r0.or(file.r0),
            r1: self.r1.or(file.r1),
            t: if flags_set_offset { self.t } else { file.t },
            t_grid: if flags_set_offset { self.t_grid } else { file.t_grid },
            level: self.level.or(file.level),
            delta: self.delta.or(file.delta),
            out: self.out.or(file.out),
            config: Some(path),
        })
    }

    pub fn geometry(&self) -> Result<SpaceForm, ConfigError> {
        match &self.geom {
            None => err("missing --geom"),
            Some(tag) => SpaceForm::from_tag(tag)
                .map_or_else(|| err(format!("unknown geometry '{tag}' (expected sph, hyp or euc)")), Ok),
        }
    }

    fn radii(&self) -> Result<(f64, f64), ConfigError> {
        match (self.r0, self.r1) {
            (None, _) => err("missing --r0"),
            (_, None) => err("missing --r1"),
            (Some(a), Some(b)) => Ok((a, b)),
        }
    }

    fn level_or(&self, default: u32) -> Result<u32, ConfigError> {
        let level = self.level.unwrap_or(default);
        if level > MAX_LEVEL {
            return err(format!("--L {level} exceeds the maximum level {MAX_LEVEL}"));
        }
        Ok(level)
    }

    fn offsets(&self) -> Result<Vec<f64>, ConfigError> {
        match (&self.t, &self.t_grid) {
            (Some(_), Some(_)) => err("--t and --t-grid are mutually exclusive"),
            (Some(t), None) => Ok(vec![*t]),
            (None, Some(grid)) => parse_grid(grid),
            (None, None) => Ok(vec![0.0]),
        }
    }

    /// Configuration for commands acting on a single annulus.
    pub fn single(&self, default_level: u32) -> Result<RunConfig, ConfigError> {
        if self.t_grid.is_some() {
            return err("--t-grid is only accepted by sweep");
        }
        self.resolve(default_level, None)
    }

    /// Configuration for a sweep: every offset must leave room for `t ± δ`.
    pub fn sweep(&self, default_level: u32, default_delta: f64) -> Result<RunConfig, ConfigError> {
        self.resolve(default_level, Some(default_delta))
    }

    fn resolve(&self, default_level: u32, default_delta: Option<f64>) -> Result<RunConfig, ConfigError> {
        let geom = self.geometry()?;
        let (r0, r1) = self.radii()?;
        let ts = self.offsets()?;
        let level = self.level_or(default_level)?;
        let delta = self.delta.or(default_delta).unwrap_or(0.0);
        if default_delta.is_some() && !(delta > 0.0 && delta.is_finite()) {
            return err(format!("--delta {delta} must be positive"));
        }
        for &t in &ts {
            AnnulusSpec::new(geom, r0, r1, t).map_err(|e| ConfigError(e.to_string()))?;
            if default_delta.is_some() && t.abs() + delta >= r1 - r0 {
                return err(format!(
                    "offset {t} with step {delta} leaves the admissible range |t| < {}",
                    r1 - r0
                ));
            }
        }
        Ok(RunConfig { geom, r0, r1, ts, level, delta, out: self.out.clone() })
    }
}

fn read_file(path: &Path) -> Result<RunArgs, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

/// Parses `A:B:S` into `A, A + S, …` up to and including `B` (to within a
/// relative 1e−9 of the step). Offsets that round to within that margin of
/// zero become exactly zero.
pub fn parse_grid(grid: &str) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = grid.split(':').collect();
    let [a, b, s] = parts[..] else {
        return err(format!("--t-grid '{grid}' must have the form A:B:S"));
    };
    let num = |x: &str| {
        x.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| ConfigError(format!("--t-grid: '{x}' is not a number")))
    };
    let (a, b, s) = (num(a)?, num(b)?, num(s)?);
    if !(s > 0.0) || b < a {
        return err(format!("--t-grid '{grid}' needs A ≤ B and a positive step"));
    }
    let steps = ((b - a) / s + 1e-9).floor();
    if steps > 10_000.0 {
        return err(format!("--t-grid '{grid}' has too many points"));
    }
    Ok((0..=steps as usize)
        .map(|k| a + k as f64 * s)
        .map(|t| if t.abs() < 1e-9 * s { 0.0 } else { t })
        .collect())
}

/// A fully validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geom: SpaceForm,
    pub r0: f64,
    pub r1: f64,
    pub ts: Vec<f64>,
    pub level: u32,
    pub delta: f64,
    pub out: Option<PathBuf>,
}
