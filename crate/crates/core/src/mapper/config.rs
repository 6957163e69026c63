use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the calibration network and its training loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapperConfig {
    /// Number of raw scores per example: 1, or 2 for concatenated pairs.
    pub input_dim: usize,
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub learning_rate: f64,
    /// Weight of the pairwise ranking term.
    pub phi_rank: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub val_fraction: f64,
    /// Validation AUROC differences up to this size count as ties when
    /// picking the snapshot; ties go to the lower validation cross-entropy.
    /// Zero selects a strict maximum.
    #[serde(default = "default_auroc_tolerance")]
    pub auroc_tolerance: f64,
    pub seed: u64,
}

fn default_auroc_tolerance() -> f64 {
    1e-3
}

impl Default for MapperConfig {
    fn default() -> Self {
        Self {
            input_dim: 1,
            hidden_width: 32,
            hidden_layers: 3,
            learning_rate: 0.01,
            phi_rank: 1.0,
            max_epochs: 500,
            patience: 50,
            val_fraction: 0.2,
            auroc_tolerance: default_auroc_tolerance(),
            seed: 0,
        }
    }
}

impl MapperConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_phi_rank(mut self, phi_rank: f64) -> Self {
        self.phi_rank = phi_rank;
        self
    }

    pub fn with_input_dim(mut self, input_dim: usize) -> Self {
        self.input_dim = input_dim;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(1..=2).contains(&self.input_dim) {
            return bad("input_dim must be 1 or 2");
        }
        if self.hidden_width == 0 || self.hidden_layers == 0 {
            return bad("hidden_width and hidden_layers must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a positive finite number");
        }
        if !(self.phi_rank >= 0.0 && self.phi_rank.is_finite()) {
            return bad("phi_rank must be finite and >= 0");
        }
        if self.max_epochs == 0 || self.patience == 0 {
            return bad("max_epochs and patience must be positive");
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return bad("val_fraction must lie in (0, 1)");
        }
        if !(self.auroc_tolerance >= 0.0 && self.auroc_tolerance < 1.0) {
            return bad("auroc_tolerance must lie in [0, 1)");
        }
        Ok(())
    }
}
