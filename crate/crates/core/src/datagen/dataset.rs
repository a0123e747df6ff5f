use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{CurveFamily, CurveSpec, CurveStyle, Matrix, OptimalDose};

/// Likelihood used for the covariate reconstruction term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XLikelihood {
    #[default]
    Gaussian,
    Bernoulli,
}

/// What a model is allowed to see: covariates, doses and noisy outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub x: Matrix,
    pub t: Vec<f64>,
    pub y: Vec<f64>,
}

impl Observations {
    pub fn new(x: Matrix, t: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if t.len() != x.rows() || y.len() != x.rows() {
            return Err(Error::Dimension {
                op: "observations",
                left: vec![x.rows(), x.cols()],
                right: vec![t.len(), y.len()],
            });
        }
        Ok(Self { x, t, y })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(idx),
            t: idx.iter().map(|&i| self.t[i]).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

/// Everything needed to recompute noiseless potential outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub curve: CurveSpec,
    /// `n × d_u` hidden confounders for news-style curves.
    pub hidden: Option<Matrix>,
}

impl GroundTruth {
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            curve: self.curve.clone(),
            hidden: self.hidden.as_ref().map(|u| u.select_rows(idx)),
        }
    }

    pub fn coefficients(&self, i: usize, x: &[f64]) -> Result<[f64; 3]> {
        self.curve
            .coefficients(x, self.hidden.as_ref().map(|u| u.row(i)))
    }

    /// Noiseless response of sample `i` at each dose in `grid`.
    pub fn curve(&self, i: usize, x: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
        let c = self.coefficients(i, x)?;
        Ok(grid.iter().map(|&t| self.curve.eval_coeffs(&c, t)).collect())
    }

    pub fn response(&self, i: usize, x: &[f64], t: f64) -> Result<f64> {
        Ok(self.curve.eval_coeffs(&self.coefficients(i, x)?, t))
    }

    pub fn optimal_dose(&self, i: usize, x: &[f64]) -> Result<OptimalDose> {
        Ok(self.curve.optimal_dose(&self.coefficients(i, x)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub seed: u64,
    pub style: CurveStyle,
    pub family: CurveFamily,
    pub n: usize,
    pub d_x: usize,
    pub d_u: usize,
    pub alpha: f64,
    pub scale: f64,
    pub noise_sd: f64,
    #[serde(default)]
    pub x_likelihood: XLikelihood,
    pub test_frac: f64,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub obs: Observations,
    pub truth: GroundTruth,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    /// Rows `idx` of both the observations and the ground truth.
    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut meta = self.meta.clone();
        meta.n = idx.len();
        meta.train_idx = (0..idx.len()).collect();
        meta.test_idx = Vec::new();
        Self {
            obs: self.obs.subset(idx),
            truth: self.truth.subset(idx),
            meta,
        }
    }

    pub fn train(&self) -> Self {
        self.subset(&self.meta.train_idx)
    }

    pub fn test(&self) -> Self {
        self.subset(&self.meta.test_idx)
    }
}
