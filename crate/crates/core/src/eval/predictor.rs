use crate::baselines::MlpBaseline;
use crate::datagen::{GroundTruth, Matrix};
use crate::error::Result;
use crate::model::ContiVaeModel;
use crate::Scalar;

/// Anything that maps covariate rows to dose-response curves on a grid.
pub trait CurvePredictor {
    fn predict_curves(&self, x: &Matrix, grid: &[f64]) -> Result<Vec<Vec<f64>>>;
}

impl<T: Scalar> CurvePredictor for ContiVaeModel<T> {
    fn predict_curves(&self, x: &Matrix, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
        ContiVaeModel::predict_curves(self, x, grid)
    }
}

impl<T: Scalar> CurvePredictor for MlpBaseline<T> {
    fn predict_curves(&self, x: &Matrix, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
        MlpBaseline::predict_curves(self, x, grid)
    }
}

impl<P: CurvePredictor + ?Sized> CurvePredictor for Box<P> {
    fn predict_curves(&self, x: &Matrix, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
        (**self).predict_curves(x, grid)
    }
}

/// Returns the true noiseless curves; rows must align with `truth`.
#[derive(Debug, Clone)]
pub struct OraclePredictor {
    pub truth: GroundTruth,
}

impl CurvePredictor for OraclePredictor {
    fn predict_curves(&self, x: &Matrix, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
        (0..x.rows())
            .map(|i| self.truth.curve(i, x.row(i), grid))
            .collect()
    }
}

/// Predicts the same constant everywhere.
#[derive(Debug, Clone, Copy)]
pub struct ConstantPredictor(pub f64);

impl CurvePredictor for ConstantPredictor {
    fn predict_curves(&self, x: &Matrix, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(vec![vec![self.0; grid.len()]; x.rows()])
    }
}
