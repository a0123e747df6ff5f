use std::fs;
use std::path::{Path, PathBuf};

use contivae::datagen::{
    read_dataset, read_observed, write_dataset, Dataset, DatasetMeta, DatasetPaths,
};
use contivae::eval::{
    cross_validate, evaluate_model, write_curves, CurveEval, CvCandidate, EvalReport, EvalRow,
    OraclePredictor,
};
use contivae::model::{config_hash, Checkpoint};
use serde::Serialize;

use crate::config::{ExperimentConfig, ModelKind, ModelSection};
use crate::error::{CliError, Result};
use crate::model::Trained;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const REPORT_FILE: &str = "report.csv";

/// Written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash(cfg),
            master_seed: cfg.seed,
            config: cfg.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
    }
}

pub(crate) fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    fs::write(path, s).map_err(|e| CliError::io(path, e))
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_manifest(dir: &Path, command: &str, cfg: &ExperimentConfig) -> Result<()> {
    write_json(&dir.join(MANIFEST_FILE), &Manifest::new(command, cfg))
}

pub fn data_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out.join("data")
}

pub fn train_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out.join("train")
}

pub fn run_dir(cfg: &ExperimentConfig, run: usize) -> PathBuf {
    train_dir(cfg).join(format!("run{run}"))
}

pub fn eval_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out.join("eval")
}

/// Writes the dataset, metadata and ground-truth sidecar under `out/data`.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<DatasetPaths> {
    cfg.validate()?;
    let ds = cfg.dataset.generate()?;
    let dir = data_dir(cfg);
    create_dir(&dir)?;
    let paths = write_dataset(&dir, &ds)?;
    write_manifest(&dir, "generate", cfg)?;
    log::info!("wrote {} samples to {}", ds.len(), dir.display());
    Ok(paths)
}

/// The dataset on disk must come from the same recipe as `cfg`.
fn check_meta(cfg: &ExperimentConfig, meta: &DatasetMeta, dir: &Path) -> Result<()> {
    let d = &cfg.dataset;
    let same = meta.seed == d.seed
        && meta.style == d.style
        && meta.family == d.family
        && meta.n == d.n
        && meta.d_x == d.d_x
        && meta.alpha == d.alpha
        && meta.scale == d.scale
        && meta.noise_sd == d.noise_sd;
    if !same {
        return Err(CliError::validation(format!(
            "{}: dataset metadata does not match the config's dataset section",
            dir.display()
        )));
    }
    Ok(())
}

/// Trains `eval.repeats` models on the training split, one directory per
/// run. With `resume`, an existing checkpoint is continued for another
/// `model.epochs`, provided its config hash matches.
pub fn cmd_train(cfg: &ExperimentConfig, data: Option<&Path>, resume: bool) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let dir = data.map_or_else(|| data_dir(cfg), Path::to_path_buf);
    let (obs, meta) = read_observed(&dir)?;
    check_meta(cfg, &meta, &dir)?;
    let train = obs.subset(&meta.train_idx);
    let kind = cfg.model.kind;
    let mut out = Vec::with_capacity(cfg.eval.repeats);
    for run in 0..cfg.eval.repeats {
        let rd = run_dir(cfg, run);
        let ckpt = rd.join(CHECKPOINT_FILE);
        let mut model = if resume && ckpt.exists() {
            let c = Checkpoint::load(&ckpt)?;
            let expected = Trained::new(cfg, kind, run)?.to_checkpoint().config_hash;
            if c.config_hash != expected {
                return Err(CliError::validation(format!(
                    "{}: checkpoint config hash {} differs from the current config ({expected})",
                    ckpt.display(),
                    c.config_hash
                )));
            }
            Trained::from_checkpoint(&c)?
        } else {
            Trained::new(cfg, kind, run)?
        };
        log::info!("training {kind} run {run} on {} samples", train.len());
        let trace = model.train(&train)?;
        create_dir(&rd)?;
        model.to_checkpoint().save(&ckpt)?;
        trace.write_csv(&rd.join(TRACE_FILE))?;
        out.push(ckpt);
    }
    write_manifest(&train_dir(cfg), "train", cfg)?;
    Ok(out)
}

/// What `cmd_evaluate` scores.
#[derive(Debug, Clone)]
pub enum EvalTarget {
    /// `out/train/run*/checkpoint.json` for every configured repeat.
    Trained,
    Checkpoints(Vec<PathBuf>),
    /// The ground-truth curves themselves.
    Oracle,
}

fn eval_row(cfg: &ExperimentConfig, meta: &DatasetMeta, model: &str, seed: u64, run: usize, e: &CurveEval) -> EvalRow {
    EvalRow {
        model: model.to_string(),
        style: meta.style,
        family: meta.family,
        alpha: meta.alpha,
        seed,
        run,
        grid_size: cfg.eval.grid_size,
        rmise: e.rmise,
        rdpe: e.rdpe,
    }
}

/// Scores each model on the test split: `report.csv` with one row per run
/// plus an aggregate row, and `curves_run{r}.csv` per run.
pub fn cmd_evaluate(cfg: &ExperimentConfig, data: Option<&Path>, target: &EvalTarget) -> Result<EvalReport> {
    cfg.validate()?;
    let dir = data.map_or_else(|| data_dir(cfg), Path::to_path_buf);
    let ds = read_dataset(&dir)?;
    let test = ds.test();
    let out = eval_dir(cfg);
    create_dir(&out)?;
    let mut rows = Vec::new();
    let mut emit = |run: usize, kind: &str, seed: u64, e: CurveEval| -> Result<()> {
        write_curves(&out.join(format!("curves_run{run}.csv")), &e)?;
        rows.push(eval_row(cfg, &ds.meta, kind, seed, run, &e));
        Ok(())
    };
    match target {
        EvalTarget::Oracle => {
            let oracle = OraclePredictor { truth: test.truth.clone() };
            emit(0, "oracle", cfg.seed, evaluate_model(&oracle, &test, cfg.eval.grid_size)?)?;
        }
        EvalTarget::Trained | EvalTarget::Checkpoints(_) => {
            let paths = match target {
                EvalTarget::Checkpoints(p) => p.clone(),
                _ => (0..cfg.eval.repeats).map(|r| run_dir(cfg, r).join(CHECKPOINT_FILE)).collect(),
            };
            if paths.is_empty() {
                return Err(CliError::validation("no checkpoints to evaluate"));
            }
            for (run, p) in paths.iter().enumerate() {
                let model = Trained::from_checkpoint(&Checkpoint::load(p)?)?;
                if model.covariate_dim() != ds.meta.d_x {
                    return Err(CliError::validation(format!(
                        "{}: model expects {} covariates, dataset has {}",
                        p.display(),
                        model.covariate_dim(),
                        ds.meta.d_x
                    )));
                }
                let e = evaluate_model(&model, &test, cfg.eval.grid_size)?;
                emit(run, model.kind(), model.seed(), e)?;
            }
        }
    }
    let report = EvalReport::from_rows(rows)?;
    report.write_csv(&out.join(REPORT_FILE))?;
    write_manifest(&out, "evaluate", cfg)?;
    Ok(report)
}

/// Fits `eval.repeats` models of `kind` on the training split of `ds` and
/// scores each on its test split.
pub fn run_repeats(cfg: &ExperimentConfig, kind: ModelKind, ds: &Dataset) -> Result<Vec<EvalRow>> {
    let (train, test) = (ds.train(), ds.test());
    (0..cfg.eval.repeats)
        .map(|run| {
            let model = Trained::fit(cfg, kind, run, &train.obs)?;
            let e = evaluate_model(&model, &test, cfg.eval.grid_size)?;
            Ok(eval_row(cfg, &ds.meta, model.kind(), model.seed(), run, &e))
        })
        .collect()
}

/// One point of the cross-validation grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub model: ModelSection,
    parameters: usize,
}

impl CvCandidate for Candidate {
    fn parameter_count(&self) -> usize {
        self.parameters
    }

    fn recon_scale(&self) -> f64 {
        match self.model.kind {
            ModelKind::Mlp => 1.0,
            _ => self.model.recon_scale,
        }
    }
}

fn or_base<T: Copy>(axis: &[T], base: T) -> Vec<T> {
    if axis.is_empty() {
        vec![base]
    } else {
        axis.to_vec()
    }
}

pub fn cv_candidates(cfg: &ExperimentConfig) -> Result<Vec<Candidate>> {
    let m = &cfg.model;
    let mut out = Vec::new();
    for &l in &or_base(&cfg.cv.recon_scale, m.recon_scale) {
        for &h in &or_base(&cfg.cv.hidden_units, m.hidden_units) {
            for &dz in &or_base(&cfg.cv.latent_dim, m.latent_dim) {
                let mut c = cfg.clone();
                c.model.recon_scale = l;
                c.model.hidden_units = h;
                c.model.latent_dim = dz;
                let parameters = match m.kind {
                    ModelKind::Mlp => c.mlp_config(0)?.parameter_count(),
                    k => c.contivae_config(k, 0)?.parameter_count(),
                };
                out.push(Candidate { model: c.model, parameters });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub candidates: Vec<Candidate>,
    pub scores: Vec<f64>,
    pub best: usize,
}

/// k-fold selection over the `[cv]` grid on the training split. Writes
/// `cv.csv` and `selected.toml`, the config with the winning model section.
pub fn cmd_cv(cfg: &ExperimentConfig, data: Option<&Path>) -> Result<CvResult> {
    cfg.validate()?;
    let dir = data.map_or_else(|| data_dir(cfg), Path::to_path_buf);
    let ds = read_dataset(&dir)?;
    check_meta(cfg, &ds.meta, &dir)?;
    let candidates = cv_candidates(cfg)?;
    let outcome = cross_validate(
        &candidates,
        &ds.train(),
        cfg.eval.folds,
        cfg.eval.grid_size,
        cfg.seed,
        |cand, fold| {
            let mut c = cfg.clone();
            c.model = cand.model.clone();
            Trained::fit(&c, c.model.kind, 0, &fold.obs).map_err(|e| match e {
                CliError::Core(e) => e,
                other => contivae::Error::Config(other.to_string()),
            })
        },
    )?;
    let out = cfg.out.join("cv");
    create_dir(&out)?;
    let mut s = String::from("candidate,recon_scale,hidden_units,latent_dim,parameters,score,selected\n");
    for (i, (c, score)) in candidates.iter().zip(&outcome.scores).enumerate() {
        s += &format!(
            "{i},{},{},{},{},{score},{}\n",
            c.model.recon_scale,
            c.model.hidden_units,
            c.model.latent_dim,
            c.parameters,
            i == outcome.best
        );
    }
    let path = out.join("cv.csv");
    fs::write(&path, s).map_err(|e| CliError::io(&path, e))?;
    let mut selected = cfg.clone();
    selected.model = candidates[outcome.best].model.clone();
    let path = out.join("selected.toml");
    fs::write(&path, selected.to_toml()).map_err(|e| CliError::io(&path, e))?;
    write_manifest(&out, "cv", cfg)?;
    Ok(CvResult {
        candidates,
        scores: outcome.scores,
        best: outcome.best,
    })
}
