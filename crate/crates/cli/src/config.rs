use std::path::Path;

use serde::{Deserialize, Serialize};

use flatsomatic::data::DEFAULT_MIN_FREQ;
use flatsomatic::vae::{LossKind, VaeConfig};

use crate::error::{CliError, CliResult, EXIT_CONFIG, EXIT_PARSE};
use crate::io::{read_input, InputDigest};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_K: usize = 32;

/// The single JSON configuration a pipeline run is driven by.
///
/// `seed` is the global seed; it replaces `vae.seed` once flags are applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub vae: VaeConfig,
    pub min_freq: usize,
    pub folds: usize,
    pub k: usize,
    /// Fold held out of training and scored after every epoch.
    pub holdout_fold: Option<usize>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            vae: VaeConfig {
                seed: DEFAULT_SEED,
                ..VaeConfig::default()
            },
            min_freq: DEFAULT_MIN_FREQ,
            folds: DEFAULT_FOLDS,
            k: DEFAULT_K,
            holdout_fold: None,
            seed: DEFAULT_SEED,
        }
    }
}

/// Command-line values that win over the config file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Global seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub latent_dim: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// bce or soft_f1.
    #[arg(long, value_parser = parse_loss)]
    pub loss: Option<LossKind>,
    #[arg(long)]
    pub beta_max: Option<f64>,
    #[arg(long)]
    pub warmup_epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub dropout_rate: Option<f64>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub holdout_fold: Option<usize>,
}

fn parse_loss(s: &str) -> Result<LossKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown loss {s:?} (expected bce or soft_f1)"))
}

impl PipelineConfig {
    /// Loads `path` if given (defaults otherwise), applies the overrides and
    /// validates. Returns the digest of the config file when one was read.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> CliResult<(Self, Option<InputDigest>)> {
        let (mut config, digest) = match path {
            Some(p) => {
                let (bytes, digest) = read_input(p)?;
                let config: PipelineConfig = serde_json::from_slice(&bytes)
                    .map_err(|e| CliError::new(EXIT_PARSE, format!("{}: {e}", p.display())))?;
                (config, Some(digest))
            }
            None => (Self::default(), None),
        };
        config.apply(overrides);
        config.validate()?;
        Ok((config, digest))
    }

    pub fn apply(&mut self, o: &Overrides) {
        let v = &mut self.vae;
        if let Some(x) = o.seed {
            self.seed = x;
        }
        if let Some(x) = o.epochs {
            v.epochs = x;
        }
        if let Some(x) = o.latent_dim {
            v.latent_dim = x;
        }
        if let Some(x) = o.batch_size {
            v.batch_size = x;
        }
        if let Some(x) = o.loss {
            v.loss = x;
        }
        if let Some(x) = o.beta_max {
            v.beta_max = x;
        }
        if let Some(x) = o.warmup_epochs {
            v.warmup_epochs = x;
        }
        if let Some(x) = o.learning_rate {
            v.learning_rate = x;
        }
        if let Some(x) = o.dropout_rate {
            v.dropout_rate = x;
        }
        if let Some(x) = o.folds {
            self.folds = x;
        }
        if o.holdout_fold.is_some() {
            self.holdout_fold = o.holdout_fold;
        }
        v.seed = self.seed;
    }

    /// Collects every violated constraint, including those of the model
    /// config.
    pub fn validate(&self) -> CliResult<()> {
        // input_dim 0 means "take it from the matrix", which is only known later.
        let vae = self.vae.clone().with_input_dim(self.vae.input_dim.max(1));
        let mut problems = match vae.validate() {
            Ok(()) => Vec::new(),
            Err(flatsomatic::Error::Config(v)) => v,
            Err(e) => vec![e.to_string()],
        };
        if self.min_freq == 0 {
            problems.push("min_freq must be >= 1".into());
        }
        if self.folds < 2 {
            problems.push(format!("folds must be >= 2, got {}", self.folds));
        }
        if self.k == 0 {
            problems.push("k must be >= 1".into());
        }
        if let Some(f) = self.holdout_fold {
            if f >= self.folds {
                problems.push(format!("holdout_fold {f} must be < folds ({})", self.folds));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::config(problems))
        }
    }
}

/// `FLATSOMATIC_THREADS` caps the worker count; absent means one.
pub fn thread_limit() -> CliResult<usize> {
    match std::env::var("FLATSOMATIC_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::new(
                EXIT_CONFIG,
                format!("FLATSOMATIC_THREADS must be a positive integer, got {v:?}"),
            )),
        },
    }
}
