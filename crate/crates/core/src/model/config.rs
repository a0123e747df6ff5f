use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datagen::XLikelihood;
use crate::error::{Error, Result};

/// Latent prior used in the KL term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    #[default]
    Tilted,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContiVaeConfig {
    pub covariate_dim: usize,
    pub latent_dim: usize,
    pub hidden_units: usize,
    pub hidden_layers: usize,
    pub tau: f64,
    /// λ, the weight on the covariate reconstruction term.
    pub recon_scale: f64,
    pub prior: PriorKind,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub mc_samples: usize,
    pub x_likelihood: XLikelihood,
}

impl Default for ContiVaeConfig {
    fn default() -> Self {
        Self {
            covariate_dim: 1,
            latent_dim: 20,
            hidden_units: 128,
            hidden_layers: 2,
            tau: 3.0,
            recon_scale: 1.0,
            prior: PriorKind::Tilted,
            learning_rate: 1e-4,
            epochs: 100,
            batch_size: 64,
            seed: 0,
            mc_samples: 100,
            x_likelihood: XLikelihood::Gaussian,
        }
    }
}

impl ContiVaeConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("covariate_dim", self.covariate_dim),
            ("latent_dim", self.latent_dim),
            ("hidden_units", self.hidden_units),
            ("hidden_layers", self.hidden_layers),
            ("batch_size", self.batch_size),
            ("mc_samples", self.mc_samples),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::config(format!("{name} must be at least 1")));
            }
        }
        if !(self.recon_scale > 0.0 && self.recon_scale <= 1.0) {
            return Err(Error::config(format!(
                "recon_scale must lie in (0, 1], got {}",
                self.recon_scale
            )));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::config(format!("tau must be finite and ≥ 0, got {}", self.tau)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate must be positive"));
        }
        Ok(())
    }

    /// Checkpoint kind tag.
    pub fn kind(&self) -> &'static str {
        match self.prior {
            PriorKind::Tilted => "contivae",
            PriorKind::Normal => "contivae_n",
        }
    }
}

/// Hex SHA-256 of the canonical JSON form of any serializable config.
pub fn config_hash<C: Serialize>(cfg: &C) -> String {
    let json = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(&json)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
