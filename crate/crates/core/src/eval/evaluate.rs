use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::model::{argmax_first, uniform_grid};

use super::metrics::{dpe, mise};
use super::predictor::CurvePredictor;

/// Predicted and true curves for a test set plus both metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveEval {
    pub grid: Vec<f64>,
    pub pred: Vec<Vec<f64>>,
    pub truth: Vec<Vec<f64>>,
    /// True optimal doses from the curve oracle.
    pub t_true: Vec<f64>,
    /// Grid argmax of each predicted curve.
    pub t_pred: Vec<f64>,
    pub rmise: f64,
    pub rdpe: f64,
}

/// Scores `model` on every row of `test` against noiseless oracle curves.
/// The observed outcomes of `test` are never read.
pub fn evaluate_model<P: CurvePredictor + ?Sized>(
    model: &P,
    test: &Dataset,
    grid_size: usize,
) -> Result<CurveEval> {
    if test.is_empty() {
        return Err(Error::contract("test split is empty"));
    }
    if grid_size < 2 {
        return Err(Error::config("grid_size must be at least 2"));
    }
    let grid = uniform_grid(grid_size);
    let x = &test.obs.x;
    let pred = model.predict_curves(x, &grid)?;
    if pred.len() != x.rows() {
        return Err(Error::Dimension {
            op: "predicted curves",
            left: vec![pred.len()],
            right: vec![x.rows()],
        });
    }
    let mut truth = Vec::with_capacity(x.rows());
    let (mut t_true, mut t_pred) = (Vec::new(), Vec::new());
    let (mut y_true, mut y_pred) = (Vec::new(), Vec::new());
    for (i, p) in pred.iter().enumerate() {
        let row = x.row(i);
        truth.push(test.truth.curve(i, row, &grid)?);
        let star = test.truth.optimal_dose(i, row)?.t;
        let k = argmax_first(p).ok_or_else(|| Error::contract("empty predicted curve"))?;
        let hat = grid[k];
        y_true.push(test.truth.response(i, row, star)?);
        y_pred.push(test.truth.response(i, row, hat)?);
        t_true.push(star);
        t_pred.push(hat);
    }
    let rmise = mise(&pred, &truth, &grid)?.sqrt();
    let rdpe = dpe(&y_true, &y_pred)?.sqrt();
    Ok(CurveEval {
        grid,
        pred,
        truth,
        t_true,
        t_pred,
        rmise,
        rdpe,
    })
}
