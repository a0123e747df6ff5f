use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use contivae::eval::{aggregate, EvalRow};
use contivae::model::config_hash;
use serde::{Deserialize, Serialize};

use crate::commands::{create_dir, run_repeats, write_json, MANIFEST_FILE};
use crate::config::{CvSection, ExperimentConfig, ModelKind, SweepSection};
use crate::error::{CliError, Result};

pub const SWEEP_HEADER: [&str; 11] = [
    "cell", "model", "alpha", "recon_scale", "hidden_units", "latent_dim", "run", "rmise", "rdpe",
    "status", "error",
];

pub const SUMMARY_HEADER: [&str; 11] = [
    "cell", "model", "alpha", "recon_scale", "hidden_units", "latent_dim", "runs", "rmise",
    "rmise_ci95", "rdpe", "rdpe_ci95",
];

/// One point of the cartesian sweep grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub model: ModelKind,
    pub alpha: f64,
    pub recon_scale: f64,
    pub hidden_units: usize,
    pub latent_dim: usize,
    /// First 16 hex digits of the cell's effective config hash.
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Done(Vec<EvalRow>),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub cells: Vec<(Cell, CellOutcome)>,
    /// Cells loaded from a previous run instead of recomputed.
    pub skipped: usize,
}

impl SweepResult {
    pub fn run_rows(&self) -> usize {
        self.cells
            .iter()
            .map(|(_, o)| match o {
                CellOutcome::Done(r) => r.len(),
                CellOutcome::Failed(_) => 0,
            })
            .sum()
    }
}

fn axis<T: Copy>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

/// The config a single cell runs with. Sweep and cv sections are cleared so
/// the hash depends only on what the cell computes.
pub fn cell_config(base: &ExperimentConfig, cell: &Cell) -> ExperimentConfig {
    let mut c = base.clone();
    c.dataset.alpha = cell.alpha;
    c.model.kind = cell.model;
    c.model.recon_scale = cell.recon_scale;
    c.model.hidden_units = cell.hidden_units;
    c.model.latent_dim = cell.latent_dim;
    c.sweep = SweepSection::default();
    c.cv = CvSection::default();
    c.out = Default::default();
    c
}

pub fn sweep_cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let (s, m) = (&cfg.sweep, &cfg.model);
    let mut cells = Vec::new();
    for &alpha in &axis(&s.alpha, cfg.dataset.alpha) {
        for &recon_scale in &axis(&s.recon_scale, m.recon_scale) {
            for &hidden_units in &axis(&s.hidden_units, m.hidden_units) {
                for &latent_dim in &axis(&s.latent_dim, m.latent_dim) {
                    for &model in &axis(&s.models, m.kind) {
                        let mut cell = Cell {
                            model,
                            alpha,
                            recon_scale,
                            hidden_units,
                            latent_dim,
                            hash: String::new(),
                        };
                        cell.hash = config_hash(&cell_config(cfg, &cell))[..16].to_string();
                        cells.push(cell);
                    }
                }
            }
        }
    }
    cells
}

fn run_cell(cfg: &ExperimentConfig, cell: &Cell, dir: &Path) -> Result<Vec<EvalRow>> {
    let rows_path = dir.join("rows.json");
    if rows_path.exists() {
        let text = fs::read_to_string(&rows_path).map_err(|e| CliError::io(&rows_path, e))?;
        return serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("{}: {e}", rows_path.display())));
    }
    let c = cell_config(cfg, cell);
    c.validate()?;
    let ds = c.dataset.generate()?;
    let rows = run_repeats(&c, cell.model, &ds)?;
    create_dir(dir)?;
    write_json(&dir.join("cell.json"), cell)?;
    // rows.json marks the cell complete, so it is written last
    write_json(&rows_path, &rows)?;
    Ok(rows)
}

/// Runs every cell of the sweep grid with `eval.repeats` runs each and
/// writes `sweep.csv` (run rows plus failed cells) and `summary.csv`.
/// Completed cells found under `out/sweep/cells` are reused; failed cells
/// are recorded and retried on the next invocation.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let out = cfg.out.join("sweep");
    let cells_dir = out.join("cells");
    create_dir(&cells_dir)?;
    let cells = sweep_cells(cfg);
    let skipped = cells
        .iter()
        .filter(|c| cells_dir.join(&c.hash).join("rows.json").exists())
        .count();

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<CellOutcome>>> = Mutex::new(vec![None; cells.len()]);
    let jobs = cfg.sweep.jobs.clamp(1, cells.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(cell) = cells.get(i) else { break };
                let dir = cells_dir.join(&cell.hash);
                let outcome = match run_cell(cfg, cell, &dir) {
                    Ok(rows) => CellOutcome::Done(rows),
                    Err(e) => {
                        log::warn!("cell {} ({} α={}) failed: {e}", cell.hash, cell.model, cell.alpha);
                        let _ = fs::create_dir_all(&dir);
                        let _ = fs::write(dir.join("error.txt"), format!("{e}\n"));
                        CellOutcome::Failed(e.to_string())
                    }
                };
                results.lock().expect("no worker panicked")[i] = Some(outcome);
            });
        }
    });
    let outcomes = results.into_inner().expect("no worker panicked");
    let result = SweepResult {
        cells: cells
            .into_iter()
            .zip(outcomes)
            .map(|(c, o)| (c, o.expect("every cell ran")))
            .collect(),
        skipped,
    };
    write_sweep_csv(&out.join("sweep.csv"), &result)?;
    write_summary_csv(&out.join("summary.csv"), &result)?;
    write_json(&out.join(MANIFEST_FILE), &crate::commands::Manifest::new("sweep", cfg))?;
    Ok(result)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cell_prefix(c: &Cell) -> String {
    format!(
        "{},{},{},{},{},{}",
        c.hash, c.model, c.alpha, c.recon_scale, c.hidden_units, c.latent_dim
    )
}

fn write_sweep_csv(path: &Path, r: &SweepResult) -> Result<()> {
    let mut s = SWEEP_HEADER.join(",") + "\n";
    for (cell, outcome) in &r.cells {
        let p = cell_prefix(cell);
        match outcome {
            CellOutcome::Done(rows) => {
                for row in rows {
                    s += &format!("{p},{},{},{},ok,\n", row.run, row.rmise, row.rdpe);
                }
            }
            CellOutcome::Failed(e) => s += &format!("{p},,,,failed,{}\n", csv_field(e)),
        }
    }
    fs::write(path, s).map_err(|e| CliError::io(path, e))
}

fn write_summary_csv(path: &Path, r: &SweepResult) -> Result<()> {
    let mut s = SUMMARY_HEADER.join(",") + "\n";
    for (cell, outcome) in &r.cells {
        if let CellOutcome::Done(rows) = outcome {
            let a = aggregate(rows)?;
            s += &format!(
                "{},{},{},{},{},{}\n",
                cell_prefix(cell),
                a.runs,
                a.rmise_mean,
                a.rmise_ci95,
                a.rdpe_mean,
                a.rdpe_ci95
            );
        }
    }
    fs::write(path, s).map_err(|e| CliError::io(path, e))
}
