use std::path::Path;

use contivae::datagen::{Matrix, Observations};
use contivae::eval::CurvePredictor;
use contivae::model::{Checkpoint, TrainTrace};
use contivae::{ContiVae, MlpBaseline};

use crate::config::{ExperimentConfig, ModelKind};
use crate::error::{CliError, Result};

/// A trained model of any kind.
pub enum Trained {
    Vae(Box<ContiVae>),
    Mlp(MlpBaseline),
}

/// Per-epoch loss rows of one training call, as written to `trace.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Trace {
    fn from_vae(t: &TrainTrace) -> Self {
        Self {
            header: TrainTrace::CSV_HEADER.to_vec(),
            rows: t
                .epochs
                .iter()
                .map(|e| {
                    vec![
                        e.epoch as f64,
                        e.total,
                        e.recon_x,
                        e.recon_t,
                        e.recon_y,
                        e.aux_t,
                        e.aux_y,
                        e.kl,
                    ]
                })
                .collect(),
        }
    }

    fn from_mlp(mse: &[f64]) -> Self {
        Self {
            header: vec!["epoch", "mse"],
            rows: mse
                .iter()
                .enumerate()
                .map(|(k, &m)| vec![(k + 1) as f64, m])
                .collect(),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(f64::to_string).collect();
            s += &cells.join(",");
            s.push('\n');
        }
        std::fs::write(path, s).map_err(|e| CliError::io(path, e))
    }
}

impl Trained {
    /// Untrained model of `kind` for repeat `run` of `cfg`.
    pub fn new(cfg: &ExperimentConfig, kind: ModelKind, run: usize) -> Result<Self> {
        Ok(match kind {
            ModelKind::Mlp => Trained::Mlp(MlpBaseline::new(cfg.mlp_config(run)?)?),
            vae => Trained::Vae(Box::new(ContiVae::new(cfg.contivae_config(vae, run)?)?)),
        })
    }

    pub fn fit(cfg: &ExperimentConfig, kind: ModelKind, run: usize, obs: &Observations) -> Result<Self> {
        let mut m = Self::new(cfg, kind, run)?;
        m.train(obs)?;
        Ok(m)
    }

    pub fn train(&mut self, obs: &Observations) -> Result<Trace> {
        Ok(match self {
            Trained::Vae(m) => Trace::from_vae(&m.train(obs)?),
            Trained::Mlp(m) => Trace::from_mlp(&m.train(obs)?),
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Trained::Vae(m) => m.config().kind(),
            Trained::Mlp(_) => ModelKind::Mlp.as_str(),
        }
    }

    pub fn covariate_dim(&self) -> usize {
        match self {
            Trained::Vae(m) => m.config().covariate_dim,
            Trained::Mlp(m) => m.config().covariate_dim,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Trained::Vae(m) => m.config().seed,
            Trained::Mlp(m) => m.config().seed,
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        match self {
            Trained::Vae(m) => m.to_checkpoint(),
            Trained::Mlp(m) => m.to_checkpoint(),
        }
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        Ok(match c.kind.as_str() {
            "mlp" => Trained::Mlp(MlpBaseline::from_checkpoint(c)?),
            _ => Trained::Vae(Box::new(ContiVae::from_checkpoint(c)?)),
        })
    }
}

impl CurvePredictor for Trained {
    fn predict_curves(&self, x: &Matrix, grid: &[f64]) -> contivae::Result<Vec<Vec<f64>>> {
        match self {
            Trained::Vae(m) => m.predict_curves(x, grid),
            Trained::Mlp(m) => m.predict_curves(x, grid),
        }
    }
}
