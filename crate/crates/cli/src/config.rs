//! Experiment description: a flat key-value file (TOML syntax) whose keys
//! mirror [`ExperimentConfig`], with CLI flags taking precedence.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Which optimizer drives the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Turbo,
    RandomSearch,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Turbo => write!(f, "turbo"),
            Algorithm::RandomSearch => write!(f, "random-search"),
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "turbo" => Ok(Algorithm::Turbo),
            "random-search" => Ok(Algorithm::RandomSearch),
            other => Err(format!(
                "unknown algorithm '{other}' (expected 'turbo' or 'random-search')"
            )),
        }
    }
}

/// One experiment: an objective, an algorithm, and the replication plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Objective name from the benchmark registry.
    pub objective: String,
    /// Problem dimension.
    pub dimension: usize,
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    /// Number of trust regions (TuRBO-m).
    #[serde(default = "default_one", alias = "m")]
    pub num_regions: usize,
    /// Batch size q.
    #[serde(default = "default_batch", alias = "q")]
    pub batch_size: usize,
    pub max_evaluations: usize,
    /// Latin hypercube size per region (re)start.
    #[serde(default = "default_init")]
    pub init_points: usize,
    #[serde(default = "default_one")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Standard deviation of additive Gaussian observation noise.
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_algorithm() -> Algorithm {
    Algorithm::Turbo
}

fn default_one() -> usize {
    1
}

fn default_batch() -> usize {
    10
}

fn default_init() -> usize {
    20
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// Flag-level overrides; every field mirrors one config key.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub objective: Option<String>,
    pub dimension: Option<usize>,
    pub algorithm: Option<Algorithm>,
    pub num_regions: Option<usize>,
    pub batch_size: Option<usize>,
    pub max_evaluations: Option<usize>,
    pub init_points: Option<usize>,
    pub replications: Option<usize>,
    pub base_seed: Option<u64>,
    pub noise_sigma: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Loads the file (when given), applies the overrides, and validates.
    pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> Result<Self, String> {
        // A synthetic minimal file lets flag-only invocations work.
        let mut raw: toml::Table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
                text.parse()
                    .map_err(|e| format!("cannot parse config {}: {e}", p.display()))?
            }
            None => toml::Table::new(),
        };

        if let Some(v) = &overrides.objective {
            raw.insert("objective".into(), toml::Value::String(v.clone()));
        }
        if let Some(v) = overrides.dimension {
            raw.insert("dimension".into(), toml::Value::Integer(v as i64));
        }
        if let Some(v) = overrides.algorithm {
            raw.insert("algorithm".into(), toml::Value::String(v.to_string()));
        }
        if let Some(v) = overrides.num_regions {
            raw.remove("m");
            raw.insert("num_regions".into(), toml::Value::Integer(v as i64));
        }
        if let Some(v) = overrides.batch_size {
            raw.remove("q");
            raw.insert("batch_size".into(), toml::Value::Integer(v as i64));
        }
        if let Some(v) = overrides.max_evaluations {
            raw.insert("max_evaluations".into(), toml::Value::Integer(v as i64));
        }
        if let Some(v) = overrides.init_points {
            raw.insert("init_points".into(), toml::Value::Integer(v as i64));
        }
        if let Some(v) = overrides.replications {
            raw.insert("replications".into(), toml::Value::Integer(v as i64));
        }
        if let Some(v) = overrides.base_seed {
            raw.insert("base_seed".into(), toml::Value::Integer(v as i64));
        }
        if let Some(v) = overrides.noise_sigma {
            raw.insert("noise_sigma".into(), toml::Value::Float(v));
        }
        if let Some(v) = &overrides.output_dir {
            raw.insert(
                "output_dir".into(),
                toml::Value::String(v.display().to_string()),
            );
        }

        let config: ExperimentConfig = raw
            .try_into()
            .map_err(|e| format!("invalid configuration: {e}"))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.dimension == 0 {
            return Err("dimension must be positive".into());
        }
        if self.replications == 0 {
            return Err("replications must be at least 1".into());
        }
        if self.batch_size == 0 || self.num_regions == 0 {
            return Err("batch size and region count must be positive".into());
        }
        if self.max_evaluations == 0 {
            return Err("max_evaluations must be positive".into());
        }
        if self.algorithm == Algorithm::Turbo
            && self.num_regions * self.init_points >= self.max_evaluations
        {
            return Err(format!(
                "budget {} does not exceed the initial designs ({} regions x {} points)",
                self.max_evaluations, self.num_regions, self.init_points
            ));
        }
        if self.noise_sigma.is_nan() || self.noise_sigma < 0.0 {
            return Err("noise_sigma must be nonnegative".into());
        }
        Ok(())
    }

    /// Seed of one replicate's optimizer stream.
    pub fn replicate_seed(&self, replicate: usize) -> u64 {
        self.base_seed.wrapping_add(replicate as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_plus_overrides_resolve() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(
            &path,
            "objective = \"ackley\"\ndimension = 10\nmax_evaluations = 500\nq = 10\nm = 2\n",
        )
        .unwrap();
        let overrides = Overrides {
            batch_size: Some(5),
            ..Default::default()
        };
        let cfg = ExperimentConfig::resolve(Some(&path), &overrides).unwrap();
        assert_eq!(cfg.objective, "ackley");
        assert_eq!(cfg.num_regions, 2); // alias `m`
        assert_eq!(cfg.batch_size, 5); // flag beats the file's `q`
        assert_eq!(cfg.init_points, 20); // default
        assert_eq!(cfg.algorithm, Algorithm::Turbo);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, "objective = \"ackley\"\ntypo_key = 1\n").unwrap();
        let err = ExperimentConfig::resolve(Some(&path), &Overrides::default()).unwrap_err();
        assert!(err.contains("typo_key"), "{err}");
    }

    #[test]
    fn validation_catches_budget_mistakes() {
        let cfg = ExperimentConfig {
            objective: "ackley".into(),
            dimension: 10,
            algorithm: Algorithm::Turbo,
            num_regions: 5,
            batch_size: 10,
            max_evaluations: 50,
            init_points: 10,
            replications: 1,
            base_seed: 0,
            noise_sigma: 0.0,
            output_dir: "out".into(),
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn replicate_seeds_are_consecutive() {
        let mut cfg = ExperimentConfig {
            objective: "ackley".into(),
            dimension: 2,
            algorithm: Algorithm::RandomSearch,
            num_regions: 1,
            batch_size: 1,
            max_evaluations: 10,
            init_points: 1,
            replications: 3,
            base_seed: 41,
            noise_sigma: 0.0,
            output_dir: "out".into(),
        };
        cfg.base_seed = 41;
        assert_eq!(cfg.replicate_seed(0), 41);
        assert_eq!(cfg.replicate_seed(2), 43);
    }
}
