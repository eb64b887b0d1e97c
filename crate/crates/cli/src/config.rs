//! Experiment configuration and how it is assembled from flags, a config
//! file, the environment and defaults (in that order of priority).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use levy_kac::DensityModel;

use crate::CliError;

pub const THREADS_ENV: &str = "LEVY_KAC_THREADS";
pub const DEFAULT_MODEL: &str = "quartic";
pub const DEFAULT_N: [usize; 4] = [16, 64, 256, 1024];
pub const DEFAULT_GRID_POW: u32 = 11;
pub const DEFAULT_TAU: f64 = levy_kac::clt::DEFAULT_TAU;
pub const GRID_POW_RANGE: (u32, u32) = (9, 22);

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: String,
    pub n_values: Vec<usize>,
    pub grid_pow: u32,
    pub tau: f64,
    pub out_dir: Option<PathBuf>,
    /// Worker threads; 0 lets the pool pick.
    pub threads: usize,
    pub force_cutoff: bool,
}

/// Values given on the command line; `None` means "not given".
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<String>,
    pub n_values: Option<Vec<usize>>,
    pub grid_pow: Option<u32>,
    pub tau: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub force_cutoff: Option<bool>,
}

impl ExperimentConfig {
    pub fn resolve(flags: &Overrides, file: Option<&Path>, env_threads: Option<&str>) -> Result<Self, CliError> {
        let from_file = match file {
            Some(p) => parse_config_file(p)?,
            None => Overrides::default(),
        };
        let env = match env_threads {
            Some(s) => Some(parse_threads(s).map_err(|e| CliError::Usage(format!("{THREADS_ENV}: {e}")))?),
            None => None,
        };
        let cfg = Self {
            model: flags
                .model
                .clone()
                .or(from_file.model)
                .unwrap_or_else(|| DEFAULT_MODEL.to_string()),
            n_values: flags
                .n_values
                .clone()
                .or(from_file.n_values)
                .unwrap_or_else(|| DEFAULT_N.to_vec()),
            grid_pow: flags.grid_pow.or(from_file.grid_pow).unwrap_or(DEFAULT_GRID_POW),
            tau: flags.tau.or(from_file.tau).unwrap_or(DEFAULT_TAU),
            out_dir: flags.out_dir.clone().or(from_file.out_dir),
            threads: flags.threads.or(from_file.threads).or(env).unwrap_or(0),
            force_cutoff: flags.force_cutoff.or(from_file.force_cutoff).unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let (lo, hi) = GRID_POW_RANGE;
        if !(lo..=hi).contains(&self.grid_pow) {
            return Err(CliError::Usage(format!("grid-pow must lie in [{lo}, {hi}], got {}", self.grid_pow)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(CliError::Usage(format!("tau must be positive, got {}", self.tau)));
        }
        if self.n_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Usage(format!(
                "n values must be strictly ascending, got {:?}",
                self.n_values
            )));
        }
        Ok(())
    }

    pub fn density_model(&self) -> Result<DensityModel, CliError> {
        Ok(DensityModel::parse(&self.model)?)
    }

    /// The N list, which must not be empty for commands that iterate over it.
    pub fn require_n(&self) -> Result<&[usize], CliError> {
        if self.n_values.is_empty() {
            Err(CliError::Usage("the list of N values is empty".into()))
        } else {
            Ok(&self.n_values)
        }
    }

    pub fn grid_points(&self) -> usize {
        1 << self.grid_pow
    }

    /// `key = value` lines describing this configuration.
    pub fn describe(&self) -> BTreeMap<&'static str, String> {
        let mut m = BTreeMap::new();
        m.insert("model", self.model.clone());
        m.insert("n", join_n(&self.n_values));
        m.insert("grid_pow", self.grid_pow.to_string());
        m.insert("tau", self.tau.to_string());
        m.insert("threads", self.threads.to_string());
        m.insert("force_cutoff", self.force_cutoff.to_string());
        m
    }
}

fn join_n(ns: &[usize]) -> String {
    ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
}

pub fn parse_n_list(s: &str) -> Result<Vec<usize>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("`{}` is not a count", t.trim())))
        .collect()
}

fn parse_threads(s: &str) -> Result<usize, String> {
    s.trim().parse().map_err(|_| format!("`{s}` is not a thread count"))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{s}` is not a boolean")),
    }
}

/// Reads `key = value` lines. Blank lines and `#` comments are skipped;
/// keys use either `-` or `_`.
pub fn parse_config_file(path: &Path) -> Result<Overrides, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config_text(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn parse_config_text(text: &str) -> Result<Overrides, String> {
    let mut o = Overrides::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let bad = |e: String| format!("line {}: {e}", i + 1);
        match key.as_str() {
            "model" => o.model = Some(value.to_string()),
            "n" | "n_values" => o.n_values = Some(parse_n_list(value).map_err(bad)?),
            "grid_pow" => {
                o.grid_pow = Some(value.parse().map_err(|_| bad(format!("`{value}` is not an integer")))?)
            }
            "tau" => o.tau = Some(value.parse().map_err(|_| bad(format!("`{value}` is not a number")))?),
            "out" | "out_dir" => o.out_dir = Some(PathBuf::from(value)),
            "threads" => o.threads = Some(parse_threads(value).map_err(bad)?),
            "force_cutoff" => o.force_cutoff = Some(parse_bool(value).map_err(bad)?),
            other => return Err(format!("line {}: unknown key `{other}`", i + 1)),
        }
    }
    Ok(o)
}
