//! Experiment configuration: a flat `key = value` file whose keys can each be
//! overridden by the command-line flag of the same name.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{NncError, Result};
use crate::source::parse_support;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Uniform,
    Parry,
}

impl FromStr for Kernel {
    type Err = NncError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform" => Ok(Kernel::Uniform),
            "parry" | "maxentropic" => Ok(Kernel::Parry),
            other => Err(NncError::Config(format!("unknown kernel '{other}' (expected uniform or parry)"))),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Uniform => "uniform",
            Kernel::Parry => "parry",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: Option<PathBuf>,
    pub fixture: Option<String>,
    pub tau: Option<usize>,
    pub jmin: f64,
    pub kernel: Kernel,
    /// Duration sets, each as written (`"1..5"`, `"{2,3}"`).
    pub lambda: Vec<String>,
    pub sigma: Vec<f64>,
    pub m: usize,
    pub block: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub prune_delta: Option<f64>,
    /// Decoder told the realized initial state (point-mass μ0).
    pub known_s0: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: None,
            fixture: None,
            tau: None,
            jmin: 1.38,
            kernel: Kernel::Parry,
            lambda: vec!["1".into()],
            sigma: vec![0.1],
            m: 10_000,
            block: 200,
            seed: 1,
            out: PathBuf::from("."),
            workers: None,
            prune_delta: None,
            known_s0: true,
        }
    }
}

pub const KEYS: &[&str] = &[
    "model", "fixture", "tau", "jmin", "kernel", "lambda", "sigma", "m", "block", "seed", "out", "workers",
    "prune_delta", "known_s0",
];

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| NncError::Config(format!("invalid value '{value}' for {key}")))
}

/// Splits a list of Λ specifications on `;` (commas belong to `{2,3}`).
pub fn split_lambda_list(value: &str) -> Vec<String> {
    value.split(';').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

pub fn parse_sigma_list(value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num::<f64>("sigma", s))
        .collect()
}

impl ExperimentConfig {
    /// Applies one `key = value` setting. Hyphens and underscores in keys are
    /// interchangeable; `model` and `fixture` replace each other.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "model" => {
                self.model = Some(PathBuf::from(value));
                self.fixture = None;
            }
            "fixture" => {
                self.fixture = Some(value.to_string());
                self.model = None;
            }
            "tau" => self.tau = Some(parse_num(&key, value)?),
            "jmin" => self.jmin = parse_num(&key, value)?,
            "kernel" => self.kernel = value.parse()?,
            "lambda" => self.lambda = split_lambda_list(value),
            "sigma" => self.sigma = parse_sigma_list(value)?,
            "m" => self.m = parse_num(&key, value)?,
            "block" => self.block = parse_num(&key, value)?,
            "seed" => self.seed = parse_num(&key, value)?,
            "out" => self.out = PathBuf::from(value),
            "workers" => self.workers = Some(parse_num(&key, value)?),
            "prune_delta" => self.prune_delta = Some(parse_num(&key, value)?),
            "known_s0" => self.known_s0 = parse_num(&key, value)?,
            _ => return Err(NncError::Config(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Reads a config file: one `key = value` per line, `#` comments.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| NncError::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text, path)
    }

    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                NncError::Config(format!("{}:{}: expected key = value", origin.display(), n + 1))
            })?;
            self.set(key, value)
                .map_err(|e| NncError::Config(format!("{}:{}: {e}", origin.display(), n + 1)))?;
        }
        Ok(())
    }

    /// Parsed duration supports, one per Λ specification.
    pub fn lambda_sets(&self) -> Result<Vec<Vec<usize>>> {
        self.lambda.iter().map(|s| parse_support(s)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda.is_empty() {
            return Err(NncError::Config("lambda is empty".into()));
        }
        self.lambda_sets()?;
        if self.sigma.is_empty() {
            return Err(NncError::Config("sigma is empty".into()));
        }
        if let Some(s) = self.sigma.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(NncError::Config(format!("sigma must be positive, got {s}")));
        }
        if !(self.jmin >= 0.0) {
            return Err(NncError::Config("jmin must be nonnegative".into()));
        }
        if self.m == 0 || self.block == 0 {
            return Err(NncError::Config("m and block must be positive".into()));
        }
        if let Some(d) = self.prune_delta {
            if !(d > 0.0) {
                return Err(NncError::Config("prune_delta must be positive".into()));
            }
        }
        if self.workers == Some(0) {
            return Err(NncError::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// `key=value` pairs describing the model and channel, recorded in trace
    /// headers so `detect` can rebuild the same setup.
    pub fn model_meta(&self, lambda: &str, sigma: f64) -> Vec<(String, String)> {
        let mut meta = Vec::new();
        if let Some(p) = &self.model {
            meta.push(("model".into(), p.display().to_string()));
        }
        if let Some(f) = &self.fixture {
            meta.push(("fixture".into(), f.clone()));
        }
        meta.push(("jmin".into(), self.jmin.to_string()));
        meta.push(("kernel".into(), self.kernel.to_string()));
        meta.push(("lambda".into(), lambda.to_string()));
        meta.push(("sigma".into(), sigma.to_string()));
        meta
    }
}
