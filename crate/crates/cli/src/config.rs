//! Run configuration: defaults, an optional flat TOML file, then flags.

use crate::chat::ChatTemplate;
use clap::Args;
use resat_core::ingest::{DEFAULT_PR_MIN, DEFAULT_STAR_MIN};
use resat_core::retrieval::{DEFAULT_B, DEFAULT_K1, DEFAULT_TOP_K};
use resat_core::samplegen::{DEFAULT_DISTRACTORS, DEFAULT_TOKEN_BUDGET};
use resat_core::Parallelism;
use serde::Deserialize;
use std::fmt;
use std::path::{Path, PathBuf};

/// Invalid flags or configuration file. Maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Flags shared by every subcommand. Each one mirrors a key of the config
/// file with dashes replaced by underscores.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonFlags {
    /// Flat TOML file with defaults for any of the flags below.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub star_min: Option<u64>,
    #[arg(long, global = true)]
    pub pr_min: Option<u64>,
    #[arg(long, global = true)]
    pub token_budget: Option<usize>,
    /// Irrelevant functions mixed into line-localization inputs.
    #[arg(long, global = true)]
    pub distractors: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub k1: Option<f64>,
    #[arg(long, global = true)]
    pub b: Option<f64>,
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
    /// API cache and snapshot root written by `scrape`.
    #[arg(long, global = true, value_name = "DIR")]
    pub cache: Option<PathBuf>,
    /// Checked-in corpus with the cache layout. Implies --offline.
    #[arg(long, global = true, value_name = "DIR")]
    pub fixtures: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub offline: bool,
    /// Exit with status 1 when any task fails.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Worker threads; 1 runs sequentially. Defaults to the CPU count.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// none, chatml or deepseek.
    #[arg(long, global = true)]
    pub chat_template: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    star_min: Option<i64>,
    pr_min: Option<i64>,
    token_budget: Option<i64>,
    distractors: Option<i64>,
    seed: Option<i64>,
    k1: Option<f64>,
    b: Option<f64>,
    top_k: Option<i64>,
    cache: Option<PathBuf>,
    fixtures: Option<PathBuf>,
    out: Option<PathBuf>,
    offline: Option<bool>,
    strict: Option<bool>,
    workers: Option<i64>,
    chat_template: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub star_min: u64,
    pub pr_min: u64,
    pub token_budget: usize,
    pub distractor_count: usize,
    pub seed: u64,
    pub k1: f64,
    pub b: f64,
    pub top_k: usize,
    pub cache: Option<PathBuf>,
    pub fixtures: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub offline: bool,
    pub strict: bool,
    pub workers: Option<usize>,
    pub chat_template: ChatTemplate,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            star_min: DEFAULT_STAR_MIN,
            pr_min: DEFAULT_PR_MIN,
            token_budget: DEFAULT_TOKEN_BUDGET,
            distractor_count: DEFAULT_DISTRACTORS,
            seed: 0,
            k1: DEFAULT_K1,
            b: DEFAULT_B,
            top_k: DEFAULT_TOP_K,
            cache: None,
            fixtures: None,
            out: None,
            offline: false,
            strict: false,
            workers: None,
            chat_template: ChatTemplate::None,
        }
    }
}

fn non_negative(key: &str, v: i64) -> Result<u64, ConfigError> {
    u64::try_from(v).map_err(|_| bad(format!("{key} must not be negative, got {v}")))
}

fn positive(key: &str, v: u64) -> Result<u64, ConfigError> {
    if v == 0 {
        return Err(bad(format!("{key} must be positive")));
    }
    Ok(v)
}

fn as_usize(key: &str, v: u64) -> Result<usize, ConfigError> {
    usize::try_from(v).map_err(|_| bad(format!("{key} is out of range")))
}

impl RunConfig {
    /// Merges defaults, the config file named by `--config` and the flags.
    pub fn resolve(flags: &CommonFlags) -> Result<Self, ConfigError> {
        let file = match &flags.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        let mut cfg = RunConfig::default();

        if let Some(v) = file.star_min {
            cfg.star_min = non_negative("star_min", v)?;
        }
        if let Some(v) = file.pr_min {
            cfg.pr_min = non_negative("pr_min", v)?;
        }
        if let Some(v) = file.token_budget {
            cfg.token_budget = as_usize("token_budget", non_negative("token_budget", v)?)?;
        }
        if let Some(v) = file.distractors {
            cfg.distractor_count = as_usize("distractors", non_negative("distractors", v)?)?;
        }
        if let Some(v) = file.seed {
            cfg.seed = non_negative("seed", v)?;
        }
        if let Some(v) = file.top_k {
            cfg.top_k = as_usize("top_k", non_negative("top_k", v)?)?;
        }
        if let Some(v) = file.workers {
            cfg.workers = Some(as_usize("workers", non_negative("workers", v)?)?);
        }
        cfg.k1 = file.k1.unwrap_or(cfg.k1);
        cfg.b = file.b.unwrap_or(cfg.b);
        cfg.cache = file.cache.or(cfg.cache);
        cfg.fixtures = file.fixtures.or(cfg.fixtures);
        cfg.out = file.out.or(cfg.out);
        cfg.offline = file.offline.unwrap_or(cfg.offline);
        cfg.strict = file.strict.unwrap_or(cfg.strict);
        if let Some(name) = file.chat_template {
            cfg.chat_template = name.parse().map_err(bad)?;
        }

        cfg.star_min = flags.star_min.unwrap_or(cfg.star_min);
        cfg.pr_min = flags.pr_min.unwrap_or(cfg.pr_min);
        cfg.token_budget = flags.token_budget.unwrap_or(cfg.token_budget);
        cfg.distractor_count = flags.distractors.unwrap_or(cfg.distractor_count);
        cfg.seed = flags.seed.unwrap_or(cfg.seed);
        cfg.k1 = flags.k1.unwrap_or(cfg.k1);
        cfg.b = flags.b.unwrap_or(cfg.b);
        cfg.top_k = flags.top_k.unwrap_or(cfg.top_k);
        cfg.cache = flags.cache.clone().or(cfg.cache);
        cfg.fixtures = flags.fixtures.clone().or(cfg.fixtures);
        cfg.out = flags.out.clone().or(cfg.out);
        cfg.offline |= flags.offline;
        cfg.strict |= flags.strict;
        cfg.workers = flags.workers.or(cfg.workers);
        if let Some(name) = &flags.chat_template {
            cfg.chat_template = name.parse().map_err(bad)?;
        }
        if cfg.fixtures.is_some() {
            cfg.offline = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        positive("star_min", self.star_min)?;
        positive("pr_min", self.pr_min)?;
        positive("token_budget", self.token_budget as u64)?;
        positive("top_k", self.top_k as u64)?;
        if let Some(w) = self.workers {
            positive("workers", w as u64)?;
        }
        if !(self.k1.is_finite() && self.k1 > 0.0) {
            return Err(bad(format!("k1 must be positive, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(bad(format!("b must lie in [0, 1], got {}", self.b)));
        }
        Ok(())
    }

    pub fn parallelism(&self) -> Parallelism {
        Parallelism::from_workers(self.workers)
    }

    /// The corpus root: `--fixtures` when given, `--cache` otherwise.
    pub fn corpus_root(&self) -> Result<&Path, ConfigError> {
        self.fixtures
            .as_deref()
            .or(self.cache.as_deref())
            .ok_or_else(|| bad("one of --fixtures or --cache is required"))
    }

    pub fn cache_root(&self) -> Result<&Path, ConfigError> {
        self.cache.as_deref().ok_or_else(|| bad("--cache is required"))
    }

    pub fn out_path(&self) -> Result<&Path, ConfigError> {
        self.out.as_deref().ok_or_else(|| bad("--out is required"))
    }
}

fn read_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| bad(format!("reading {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
}
