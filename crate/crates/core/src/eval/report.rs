use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::{CurveFamily, CurveStyle};
use crate::error::{Error, Result};

use super::evaluate::CurveEval;
use super::metrics::mean_ci;

/// Metrics of one trained model on one test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub model: String,
    pub style: CurveStyle,
    pub family: CurveFamily,
    pub alpha: f64,
    pub seed: u64,
    pub run: usize,
    pub grid_size: usize,
    pub rmise: f64,
    pub rdpe: f64,
}

/// Mean ± 95% CI half-width over repeat runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub rmise_mean: f64,
    pub rmise_ci95: f64,
    pub rdpe_mean: f64,
    pub rdpe_ci95: f64,
    pub single_run: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub aggregate: Aggregate,
}

pub fn aggregate(rows: &[EvalRow]) -> Result<Aggregate> {
    if rows.is_empty() {
        return Err(Error::contract("aggregate needs at least one run"));
    }
    let r: Vec<f64> = rows.iter().map(|r| r.rmise).collect();
    let d: Vec<f64> = rows.iter().map(|r| r.rdpe).collect();
    let (rmise_mean, rmise_ci95, single_run) = mean_ci(&r);
    let (rdpe_mean, rdpe_ci95, _) = mean_ci(&d);
    Ok(Aggregate {
        runs: rows.len(),
        rmise_mean,
        rmise_ci95,
        rdpe_mean,
        rdpe_ci95,
        single_run,
    })
}

pub const REPORT_HEADER: [&str; 13] = [
    "row", "model", "style", "family", "alpha", "seed", "run", "grid_size", "rmise",
    "rmise_ci95", "rdpe", "rdpe_ci95", "single_run",
];

pub const CURVE_HEADER: [&str; 4] = ["sample_id", "t", "y_true", "y_pred"];

impl EvalReport {
    pub fn from_rows(rows: Vec<EvalRow>) -> Result<Self> {
        let aggregate = aggregate(&rows)?;
        Ok(Self { rows, aggregate })
    }

    /// One line per run followed by one aggregate line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
        let err = |e: csv::Error| Error::parse(path, e);
        w.write_record(REPORT_HEADER).map_err(err)?;
        for r in &self.rows {
            w.write_record([
                "run".to_string(),
                r.model.clone(),
                r.style.to_string(),
                r.family.to_string(),
                r.alpha.to_string(),
                r.seed.to_string(),
                r.run.to_string(),
                r.grid_size.to_string(),
                r.rmise.to_string(),
                String::new(),
                r.rdpe.to_string(),
                String::new(),
                String::new(),
            ])
            .map_err(err)?;
        }
        let first = &self.rows[0];
        let a = &self.aggregate;
        w.write_record([
            "aggregate".to_string(),
            first.model.clone(),
            first.style.to_string(),
            first.family.to_string(),
            first.alpha.to_string(),
            String::new(),
            String::new(),
            first.grid_size.to_string(),
            a.rmise_mean.to_string(),
            a.rmise_ci95.to_string(),
            a.rdpe_mean.to_string(),
            a.rdpe_ci95.to_string(),
            a.single_run.to_string(),
        ])
        .map_err(err)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Fixed-width table for terminals.
    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:<12} {:>5} {:>10} {:>10}\n",
            "model", "run", "rmise", "rdpe"
        );
        for r in &self.rows {
            s += &format!("{:<12} {:>5} {:>10.4} {:>10.4}\n", r.model, r.run, r.rmise, r.rdpe);
        }
        let a = &self.aggregate;
        s += &format!(
            "{:<12} {:>5} {:>10} {:>10}\n",
            self.rows[0].model,
            "mean",
            format!("{:.4}±{:.4}", a.rmise_mean, a.rmise_ci95),
            format!("{:.4}±{:.4}", a.rdpe_mean, a.rdpe_ci95)
        );
        s
    }
}

/// Long-format curve dump for plotting.
pub fn write_curves(path: &Path, eval: &CurveEval) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
    let err = |e: csv::Error| Error::parse(path, e);
    w.write_record(CURVE_HEADER).map_err(err)?;
    for (i, (p, y)) in eval.pred.iter().zip(&eval.truth).enumerate() {
        for (k, t) in eval.grid.iter().enumerate() {
            w.write_record([i.to_string(), t.to_string(), y[k].to_string(), p[k].to_string()])
                .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
