//! Semi-synthetic benchmark generation.
//!
//! Covariates are either synthetic (uniform, or softplus proxies of hidden
//! confounders) or loaded from CSV; outcomes follow one of four
//! parameterised dose-response families; doses are drawn from a Beta
//! distribution whose mode is each sample's optimal dose, so `α > 1` induces
//! selection bias. Hidden confounders are kept in [`GroundTruth`], never in
//! the [`Observations`] that models consume.

mod assign;
mod covariates;
mod curves;
mod dataset;
mod io;
mod matrix;
mod split;

pub use assign::{assign_and_observe, AssignParams, GenerateConfig};
pub use covariates::{
    gen_covariates, gen_hidden_confounders, load_csv_matrix, normalize_covariates,
    CovariateSource, ProxyCovariates,
};
pub use curves::{
    optimal_dose_analytic, optimal_dose_grid, CurveFamily, CurveParams, CurveSpec, CurveStyle,
    OptimalDose, DoseSource, ORACLE_GRID,
};
pub use dataset::{Dataset, DatasetMeta, GroundTruth, Observations, XLikelihood};
pub use io::{
    read_dataset, read_ground_truth, read_observations, read_observed, write_dataset,
    write_observations, DatasetPaths,
};
pub(crate) use io::{read_json, write_json};
pub use matrix::Matrix;
pub use split::{kfold, train_test_split, Split};
