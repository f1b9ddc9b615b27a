//! Run configuration: a flat TOML file, overridden by command-line flags.
//!
//! Phase values (`q_grid`, `q_base`, `q_noise_std`) are written in multiples
//! of π, so `q_base = 0.1` means 0.1π radians.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sdgcl_core::augment::PerturbationConfig;
use sdgcl_core::encoder::ModelDims;
use sdgcl_core::graph::EdgeFormat;
use sdgcl_core::training::TrainConfig;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Raw edge list, or a directory written by `prepare`.
    pub dataset: Option<PathBuf>,
    /// Guessed from the file extension when absent.
    pub format: Option<EdgeFormat>,
    /// Split seed for raw edge lists; each run uses its own seed when absent.
    pub split_seed: Option<u64>,
    pub seed: u64,
    pub seeds: usize,
    pub threshold: f64,

    pub p: f64,
    pub r: f64,
    pub q_grid: Vec<f64>,
    pub q_base: f64,
    pub q_noise_std: f64,

    pub alpha: f64,
    pub tau: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub patience: usize,
    pub symmetric_inter_loss: bool,
    pub pos_neg_ratio: usize,
    pub freeze_sampling: bool,
    pub use_projection: bool,

    pub dim: usize,
    pub layers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let dims = ModelDims::default();
        Self {
            dataset: None,
            format: None,
            split_seed: None,
            seed: 0,
            seeds: 1,
            threshold: 0.5,
            p: 0.1,
            r: 0.1,
            q_grid: vec![0.0, 0.1, 0.2, 0.3, 0.4],
            q_base: 0.1,
            q_noise_std: 0.0,
            alpha: train.alpha,
            tau: train.tau,
            lr: train.lr,
            weight_decay: train.weight_decay,
            epochs: train.max_epochs,
            patience: train.patience,
            symmetric_inter_loss: train.symmetric_inter_loss,
            pos_neg_ratio: train.pos_neg_ratio,
            freeze_sampling: train.freeze_sampling,
            use_projection: train.use_projection,
            dim: dims.embed,
            layers: dims.layers,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::ConfigFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Checks everything that does not need the dataset.
    pub fn validate(&self) -> Result<()> {
        if self.seeds == 0 {
            return Err(CliError::Usage("--seeds must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(CliError::Usage(format!("threshold must lie in [0, 1], got {}", self.threshold)));
        }
        self.perturbation(0).validate()?;
        self.train_config(0).validate()?;
        self.dims().validate()?;
        Ok(())
    }

    pub fn dataset(&self) -> Result<&Path> {
        self.dataset
            .as_deref()
            .ok_or_else(|| CliError::Usage("no dataset given (use --dataset or set it in --config)".into()))
    }

    pub fn format_for(&self, path: &Path) -> EdgeFormat {
        self.format.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => EdgeFormat::SnapRating,
            _ => EdgeFormat::ThreeColumn,
        })
    }

    pub fn run_seeds(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|k| self.seed + k).collect()
    }

    pub fn perturbation(&self, seed: u64) -> PerturbationConfig {
        PerturbationConfig {
            sign_flip_ratio: self.p,
            direction_flip_ratio: self.r,
            q_choices: self.q_grid.iter().map(|q| q * PI).collect(),
            q_base: self.q_base * PI,
            q_noise_std: self.q_noise_std * PI,
            seed,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            alpha: self.alpha,
            tau: self.tau,
            lr: self.lr,
            weight_decay: self.weight_decay,
            max_epochs: self.epochs,
            patience: self.patience,
            seed,
            symmetric_inter_loss: self.symmetric_inter_loss,
            pos_neg_ratio: self.pos_neg_ratio,
            freeze_sampling: self.freeze_sampling,
            use_projection: self.use_projection,
        }
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            layers: self.layers,
            ..ModelDims::uniform(self.dim)
        }
    }

    /// Laplacian perturbation off: the phase is always `q_base`.
    pub fn without_laplacian_aug(mut self) -> Self {
        self.q_grid = vec![self.q_base];
        self.q_noise_std = 0.0;
        self
    }

    pub fn without_structure_aug(mut self) -> Self {
        self.p = 0.0;
        self.r = 0.0;
        self
    }
}
