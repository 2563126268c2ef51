//! Flat key=value run configuration.
//!
//! The format is a text file of `key = value` lines (spaces optional),
//! `#` comments, and blank lines. Unknown keys are rejected so a typo
//! cannot silently fall back to a default. The bookkeeping keys written
//! into run manifests (`command`, `version`, `outputs`) are accepted and
//! ignored, which makes any manifest directly loadable as a config.

use crate::error::{CliError, Result};
use distib_core::trainer::TrainConfig;
use std::path::{Path, PathBuf};

/// Which dataset a run operates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Synth,
    Mnist,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Synth => "synth",
            DatasetKind::Mnist => "mnist",
        }
    }
}

/// Everything a run needs: data source, training hyperparameters, output dir.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetKind,
    /// Directory holding the four MNIST IDX files.
    pub data_dir: PathBuf,
    /// Synthetic training rows per class.
    pub n_per_class: usize,
    /// Synthetic held-out rows per class.
    pub n_test_per_class: usize,
    /// Synthetic image side length in pixels.
    pub image_side: usize,
    pub train: TrainConfig,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetKind::Synth,
            data_dir: PathBuf::from("data/mnist"),
            n_per_class: 2000,
            n_test_per_class: 500,
            image_side: 14,
            train: TrainConfig::default(),
            out_dir: PathBuf::from("runs/out"),
        }
    }
}

/// Key order used when echoing a config into manifests; fixed so that
/// identical configs always serialize to identical bytes.
pub const CONFIG_KEYS: [&str; 16] = [
    "dataset",
    "data_dir",
    "n_per_class",
    "n_test_per_class",
    "image_side",
    "epochs",
    "batch_size",
    "seed",
    "beta",
    "learning_rate",
    "dim_a",
    "dim_z",
    "hidden",
    "mc_samples",
    "log_every",
    "out_dir",
];

impl RunConfig {
    /// Parses a config file over the defaults, rejecting unknown keys.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(crate::error::io_err(path))?;
        let mut config = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::ConfigSyntax {
                    path: path.to_path_buf(),
                    line: line_no,
                    text: raw.to_string(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            config.apply(path, line_no, key, value)?;
        }
        Ok(config)
    }

    fn apply(&mut self, path: &Path, line: usize, key: &str, value: &str) -> Result<()> {
        let bad = |reason: &'static str| CliError::BadValue {
            path: path.to_path_buf(),
            line,
            key: key.to_string(),
            value: value.to_string(),
            reason,
        };
        match key {
            "dataset" => {
                self.dataset = match value {
                    "synth" => DatasetKind::Synth,
                    "mnist" => DatasetKind::Mnist,
                    _ => return Err(bad("expected synth or mnist")),
                }
            }
            "data_dir" => self.data_dir = PathBuf::from(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "n_per_class" => self.n_per_class = value.parse().map_err(|_| bad("expected a positive integer"))?,
            "n_test_per_class" => {
                self.n_test_per_class = value.parse().map_err(|_| bad("expected a non-negative integer"))?
            }
            "image_side" => self.image_side = value.parse().map_err(|_| bad("expected a positive integer"))?,
            "epochs" => self.train.epochs = value.parse().map_err(|_| bad("expected a positive integer"))?,
            "batch_size" => self.train.batch_size = value.parse().map_err(|_| bad("expected a positive integer"))?,
            "seed" => self.train.seed = value.parse().map_err(|_| bad("expected an unsigned integer"))?,
            "beta" => self.train.beta = value.parse().map_err(|_| bad("expected a number in [0,1]"))?,
            "learning_rate" => {
                self.train.learning_rate = value.parse().map_err(|_| bad("expected a positive number"))?
            }
            "dim_a" => self.train.dim_a = value.parse().map_err(|_| bad("expected a positive integer"))?,
            "dim_z" => self.train.dim_z = value.parse().map_err(|_| bad("expected a positive integer"))?,
            "hidden" => self.train.hidden = value.parse().map_err(|_| bad("expected a positive integer"))?,
            "mc_samples" => self.train.mc_samples = value.parse().map_err(|_| bad("expected a positive integer"))?,
            "log_every" => self.train.log_every = value.parse().map_err(|_| bad("expected a positive integer"))?,
            // Manifest bookkeeping; ignored so manifests load as configs.
            "command" | "version" | "outputs" => {}
            _ => {
                return Err(CliError::UnknownKey {
                    path: path.to_path_buf(),
                    line,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// The config as manifest lines, in fixed [`CONFIG_KEYS`] order.
    pub fn echo_lines(&self) -> Vec<String> {
        CONFIG_KEYS
            .iter()
            .map(|&key| format!("{key} = {}", self.value_of(key)))
            .collect()
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "dataset" => self.dataset.name().to_string(),
            "data_dir" => self.data_dir.display().to_string(),
            "n_per_class" => self.n_per_class.to_string(),
            "n_test_per_class" => self.n_test_per_class.to_string(),
            "image_side" => self.image_side.to_string(),
            "epochs" => self.train.epochs.to_string(),
            "batch_size" => self.train.batch_size.to_string(),
            "seed" => self.train.seed.to_string(),
            "beta" => self.train.beta.to_string(),
            "learning_rate" => self.train.learning_rate.to_string(),
            "dim_a" => self.train.dim_a.to_string(),
            "dim_z" => self.train.dim_z.to_string(),
            "hidden" => self.train.hidden.to_string(),
            "mc_samples" => self.train.mc_samples.to_string(),
            "log_every" => self.train.log_every.to_string(),
            "out_dir" => self.out_dir.display().to_string(),
            _ => unreachable!("value_of covers every CONFIG_KEYS entry"),
        }
    }
}
