//! Structured-text checkpoints shared by every model kind.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::{read_json, write_json};
use crate::error::{Error, Result};
use crate::gradcore::AdamState;
use crate::Scalar;

use super::config::{config_hash, ContiVaeConfig};
use super::layers::NamedTensor;
use super::network::ContiVaeModel;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSnapshot {
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl OptimizerSnapshot {
    pub fn capture<T: Scalar>(s: &AdamState<T>) -> Self {
        let f = |b: &Vec<Vec<T>>| -> Vec<Vec<f64>> {
            b.iter().map(|v| v.iter().map(|x| x.as_f64()).collect()).collect()
        };
        Self {
            step: s.step,
            m: f(&s.m),
            v: f(&s.v),
        }
    }

    pub fn restore<T: Scalar>(&self) -> AdamState<T> {
        let f = |b: &Vec<Vec<f64>>| -> Vec<Vec<T>> {
            b.iter().map(|v| v.iter().map(|&x| T::of(x)).collect()).collect()
        };
        AdamState {
            step: self.step,
            m: f(&self.m),
            v: f(&self.v),
        }
    }
}

/// Self-describing model file: kind tag, effective config and its hash,
/// outcome scaling, named parameters and optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub kind: String,
    pub precision: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub output_scaling: Option<(f64, f64)>,
    pub params: Vec<NamedTensor>,
    pub optimizer: OptimizerSnapshot,
}

pub(crate) fn precision_name<T: Scalar>() -> &'static str {
    match std::mem::size_of::<T>() {
        4 => "f32",
        _ => "f64",
    }
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c: Checkpoint = read_json(path)?;
        if c.version != CHECKPOINT_VERSION {
            return Err(Error::config(format!(
                "{}: checkpoint version {} is not supported (expected {})",
                path.display(),
                c.version,
                CHECKPOINT_VERSION
            )));
        }
        Ok(c)
    }

    /// Decodes the embedded config after checking the kind tag and hash.
    pub fn typed_config<C>(&self, kinds: &[&str]) -> Result<C>
    where
        C: Serialize + serde::de::DeserializeOwned,
    {
        if !kinds.contains(&self.kind.as_str()) {
            return Err(Error::config(format!(
                "checkpoint kind {} where one of {:?} was expected",
                self.kind, kinds
            )));
        }
        let cfg: C = serde_json::from_value(self.config.clone())
            .map_err(|e| Error::config(format!("checkpoint config: {e}")))?;
        if config_hash(&cfg) != self.config_hash {
            return Err(Error::config("checkpoint config hash does not match its config"));
        }
        Ok(cfg)
    }
}

impl<T: Scalar> ContiVaeModel<T> {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let cfg = self.config();
        Checkpoint {
            version: CHECKPOINT_VERSION,
            kind: cfg.kind().to_string(),
            precision: precision_name::<T>().to_string(),
            config_hash: config_hash(cfg),
            config: serde_json::to_value(cfg).expect("config serializes"),
            output_scaling: self.output_scaling,
            params: self.params().to_named(),
            optimizer: OptimizerSnapshot::capture(&self.adam),
        }
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        let cfg: ContiVaeConfig = c.typed_config(&["contivae", "contivae_n"])?;
        if cfg.kind() != c.kind {
            return Err(Error::config(format!(
                "checkpoint kind {} disagrees with its prior setting",
                c.kind
            )));
        }
        let mut m = Self::new(cfg)?;
        m.params_mut().load_named(&c.params)?;
        m.output_scaling = c.output_scaling;
        let adam: AdamState<T> = c.optimizer.restore();
        if adam.m.len() != m.params().len() {
            return Err(Error::contract("optimizer state does not match parameters"));
        }
        m.adam = adam;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ContiVaeConfig, PriorKind};

    #[test]
    fn round_trip_through_file() {
        let cfg = ContiVaeConfig {
            covariate_dim: 3,
            latent_dim: 2,
            hidden_units: 4,
            prior: PriorKind::Normal,
            ..Default::default()
        };
        let mut m = ContiVaeModel::<f64>::new(cfg).unwrap();
        m.set_output_scaling(1.5, 2.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        m.to_checkpoint().save(&path).unwrap();
        let c = Checkpoint::load(&path).unwrap();
        assert_eq!(c.kind, "contivae_n");
        let back = ContiVaeModel::<f64>::from_checkpoint(&c).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn tampered_config_rejected() {
        let m = ContiVaeModel::<f64>::new(ContiVaeConfig {
            covariate_dim: 2,
            latent_dim: 2,
            hidden_units: 3,
            ..Default::default()
        })
        .unwrap();
        let mut c = m.to_checkpoint();
        c.config["epochs"] = serde_json::json!(7);
        assert!(matches!(
            ContiVaeModel::<f64>::from_checkpoint(&c),
            Err(Error::Config(_))
        ));
    }
}
