use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use contivae::baselines::MlpBaselineConfig;
use contivae::datagen::GenerateConfig;
use contivae::model::{ContiVaeConfig, PriorKind};
use contivae::rng::derive_seed;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Contivae,
    ContivaeN,
    Mlp,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Contivae => "contivae",
            ModelKind::ContivaeN => "contivae_n",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "contivae" => Ok(ModelKind::Contivae),
            "contivae_n" => Ok(ModelKind::ContivaeN),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(format!("unknown model kind {other:?} (contivae, contivae_n, mlp)")),
        }
    }
}

/// Network and optimizer knobs shared by every model kind. The MLP ignores
/// the latent, prior and reconstruction settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub latent_dim: usize,
    pub hidden_units: usize,
    pub hidden_layers: usize,
    pub tau: f64,
    /// λ
    pub recon_scale: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let c = ContiVaeConfig::default();
        Self {
            kind: ModelKind::Contivae,
            latent_dim: c.latent_dim,
            hidden_units: c.hidden_units,
            hidden_layers: c.hidden_layers,
            tau: c.tau,
            recon_scale: c.recon_scale,
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            batch_size: c.batch_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub grid_size: usize,
    /// L, Monte Carlo draws of z per predicted curve.
    pub mc_samples: usize,
    pub repeats: usize,
    pub folds: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            grid_size: 65,
            mc_samples: 100,
            repeats: 1,
            folds: 5,
        }
    }
}

/// Axis values for `sweep`; empty axes keep the base config's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub alpha: Vec<f64>,
    pub recon_scale: Vec<f64>,
    pub hidden_units: Vec<usize>,
    pub latent_dim: Vec<usize>,
    pub models: Vec<ModelKind>,
    pub jobs: usize,
}

/// Candidate grid for `cv`; empty lists keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSection {
    pub recon_scale: Vec<f64>,
    pub hidden_units: Vec<usize>,
    pub latent_dim: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed. Dataset and per-run model seeds are derived from it.
    pub seed: u64,
    pub out: PathBuf,
    /// `dataset.seed` is overwritten with a sub-seed of `seed`.
    pub dataset: GenerateConfig,
    pub model: ModelSection,
    pub eval: EvalSection,
    pub sweep: SweepSection,
    pub cv: CvSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut c = Self {
            seed: 0,
            out: PathBuf::from("out"),
            dataset: GenerateConfig::default(),
            model: ModelSection::default(),
            eval: EvalSection::default(),
            sweep: SweepSection::default(),
            cv: CvSection::default(),
        };
        c.dataset.seed = c.dataset_seed();
        c
    }
}

/// Command-line overrides, applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub models: Vec<ModelKind>,
    pub alpha: Vec<f64>,
    pub lambda: Vec<f64>,
    pub grid_size: Option<usize>,
    pub repeats: Option<usize>,
    pub jobs: Option<usize>,
}

fn single<T: Copy>(name: &str, v: &[T]) -> Result<Option<T>> {
    match v {
        [] => Ok(None),
        [x] => Ok(Some(*x)),
        _ => Err(CliError::validation(format!(
            "--{name} takes one value outside sweep"
        ))),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::validation(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Validation(m) => CliError::validation(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn dataset_seed(&self) -> u64 {
        derive_seed(self.seed, "datagen")
    }

    /// Model seed for repeat `run`; the data are shared across runs.
    pub fn run_seed(&self, run: usize) -> u64 {
        derive_seed(self.seed, &format!("init/run{run}"))
    }

    /// Applies overrides and validates. `sweep` allows list-valued
    /// `--alpha`, `--lambda` and `--model`; other commands take one value.
    pub fn resolve(mut self, o: &Overrides, sweep: bool) -> Result<Self> {
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(g) = o.grid_size {
            self.eval.grid_size = g;
        }
        if let Some(r) = o.repeats {
            self.eval.repeats = r;
        }
        if let Some(j) = o.jobs {
            self.sweep.jobs = j;
        }
        if sweep {
            if !o.alpha.is_empty() {
                self.sweep.alpha = o.alpha.clone();
            }
            if !o.lambda.is_empty() {
                self.sweep.recon_scale = o.lambda.clone();
            }
            if !o.models.is_empty() {
                self.sweep.models = o.models.clone();
            }
        } else {
            if let Some(a) = single("alpha", &o.alpha)? {
                self.dataset.alpha = a;
            }
            if let Some(l) = single("lambda", &o.lambda)? {
                self.model.recon_scale = l;
            }
            if let Some(m) = single("model", &o.models)? {
                self.model.kind = m;
            }
        }
        self.dataset.seed = self.dataset_seed();
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        let e = &self.eval;
        if e.grid_size < 2 {
            return Err(CliError::validation("eval.grid_size must be at least 2"));
        }
        if e.repeats == 0 || e.mc_samples == 0 {
            return Err(CliError::validation("eval.repeats and eval.mc_samples must be ≥ 1"));
        }
        if e.folds < 2 {
            return Err(CliError::validation("eval.folds must be at least 2"));
        }
        self.contivae_config(self.model.kind, 0)?;
        self.mlp_config(0)?;
        for &a in &self.sweep.alpha {
            if a.is_nan() || a < 1.0 {
                return Err(CliError::validation(format!("sweep alpha {a} must be ≥ 1")));
            }
        }
        for &l in self.sweep.recon_scale.iter().chain(&self.cv.recon_scale) {
            if !(l > 0.0 && l <= 1.0) {
                return Err(CliError::validation(format!("λ = {l} must lie in (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn contivae_config(&self, kind: ModelKind, run: usize) -> Result<ContiVaeConfig> {
        let m = &self.model;
        let c = ContiVaeConfig {
            covariate_dim: self.dataset.d_x,
            latent_dim: m.latent_dim,
            hidden_units: m.hidden_units,
            hidden_layers: m.hidden_layers,
            tau: m.tau,
            recon_scale: m.recon_scale,
            prior: if kind == ModelKind::ContivaeN {
                PriorKind::Normal
            } else {
                PriorKind::Tilted
            },
            learning_rate: m.learning_rate,
            epochs: m.epochs,
            batch_size: m.batch_size,
            seed: self.run_seed(run),
            mc_samples: self.eval.mc_samples,
            x_likelihood: self.dataset.x_likelihood,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn mlp_config(&self, run: usize) -> Result<MlpBaselineConfig> {
        let m = &self.model;
        let c = MlpBaselineConfig {
            covariate_dim: self.dataset.d_x,
            hidden_units: m.hidden_units,
            hidden_layers: m.hidden_layers,
            learning_rate: m.learning_rate,
            epochs: m.epochs,
            batch_size: m.batch_size,
            seed: self.run_seed(run),
        };
        c.validate()?;
        Ok(c)
    }
}
