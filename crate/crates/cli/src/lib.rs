//! Batch experiment runner: `generate`, `train`, `evaluate`, `sweep` and
//! `cv`, driven by one TOML config with command-line overrides.
//!
//! Every command writes a `manifest.json` holding the effective config, its
//! hash, the crate version and the master seed. Output directories under
//! `out`:
//!
//! ```text
//! data/                 data.csv, meta.json, ground_truth.json
//! train/run{r}/         checkpoint.json, trace.csv
//! eval/                 report.csv, curves_run{r}.csv
//! sweep/                sweep.csv, summary.csv, cells/{hash}/
//! cv/                   cv.csv, selected.toml
//! ```

pub mod commands;
pub mod config;
pub mod error;
pub mod model;
pub mod sweep;

pub use commands::{cmd_cv, cmd_evaluate, cmd_generate, cmd_train, EvalTarget, Manifest};
pub use config::{ExperimentConfig, ModelKind, Overrides};
pub use error::{Category, CliError, Result};
pub use model::Trained;
pub use sweep::cmd_sweep;
