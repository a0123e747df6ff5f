//! On-disk dataset layout:
//!
//! * `data.csv`: header `x_0..x_{d−1},t,y`, one row per sample;
//! * `meta.json`: generation settings and the train/test split;
//! * `ground_truth.json`: curve parameters and hidden confounders, read
//!   only by evaluation.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::{Dataset, DatasetMeta, GroundTruth, Matrix, Observations};

pub const DATA_FILE: &str = "data.csv";
pub const META_FILE: &str = "meta.json";
pub const TRUTH_FILE: &str = "ground_truth.json";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub data: PathBuf,
    pub meta: PathBuf,
    pub truth: PathBuf,
}

impl DatasetPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            data: dir.join(DATA_FILE),
            meta: dir.join(META_FILE),
            truth: dir.join(TRUTH_FILE),
        }
    }
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::parse(path, e))?;
    s.push('\n');
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| Error::parse(path, e))
}

pub fn write_observations(path: &Path, obs: &Observations) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
    let mut header: Vec<String> = (0..obs.dim()).map(|j| format!("x_{j}")).collect();
    header.push("t".into());
    header.push("y".into());
    w.write_record(&header).map_err(|e| Error::parse(path, e))?;
    for i in 0..obs.len() {
        let rec = obs
            .x
            .row(i)
            .iter()
            .chain([&obs.t[i], &obs.y[i]])
            .map(|v| format!("{v}"));
        w.write_record(rec).map_err(|e| Error::parse(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_observations(path: &Path) -> Result<Observations> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
    let header = r.headers().map_err(|e| Error::parse(path, e))?.clone();
    let width = header.len();
    if width < 3 || &header[width - 2] != "t" || &header[width - 1] != "y" {
        return Err(Error::parse(path, "header must end with t,y"));
    }
    let d = width - 2;
    let (mut x, mut t, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, e))?;
        let vals: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let vals = vals.map_err(|e| Error::parse(path, format!("row {}: {e}", line + 2)))?;
        x.extend_from_slice(&vals[..d]);
        t.push(vals[d]);
        y.push(vals[d + 1]);
    }
    Observations::new(Matrix::new(t.len(), d, x)?, t, y)
}

/// Writes the three dataset files into `dir`, creating it if needed.
pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<DatasetPaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = DatasetPaths::in_dir(dir);
    write_observations(&paths.data, &ds.obs)?;
    write_json(&paths.meta, &ds.meta)?;
    write_json(&paths.truth, &ds.truth)?;
    Ok(paths)
}

/// Model-visible part of a dataset directory.
pub fn read_observed(dir: &Path) -> Result<(Observations, DatasetMeta)> {
    let paths = DatasetPaths::in_dir(dir);
    let obs = read_observations(&paths.data)?;
    let meta: DatasetMeta = read_json(&paths.meta)?;
    if meta.n != obs.len() || meta.d_x != obs.dim() {
        return Err(Error::config(format!(
            "{}: metadata says {}×{}, data has {}×{}",
            dir.display(),
            meta.n,
            meta.d_x,
            obs.len(),
            obs.dim()
        )));
    }
    Ok((obs, meta))
}

pub fn read_ground_truth(dir: &Path) -> Result<GroundTruth> {
    let path = DatasetPaths::in_dir(dir).truth;
    if !path.exists() {
        return Err(Error::config(format!(
            "ground-truth sidecar {} is missing",
            path.display()
        )));
    }
    read_json(&path)
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let (obs, meta) = read_observed(dir)?;
    let truth = read_ground_truth(dir)?;
    Ok(Dataset { obs, truth, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{CurveFamily, CurveStyle, GenerateConfig, XLikelihood};

    #[test]
    fn dataset_round_trips_bitwise() {
        let cfg = GenerateConfig {
            style: CurveStyle::News,
            family: CurveFamily::Cosine,
            n: 60,
            d_x: 5,
            d_u: 2,
            alpha: 2.0,
            scale: 10.0,
            noise_sd: 0.1,
            proxy_noise_sd: 0.05,
            test_frac: 0.2,
            seed: 4,
            covariates_csv: None,
            hidden_csv: None,
            min_denominator: 1e-8,
            x_likelihood: XLikelihood::Gaussian,
        };
        let ds = cfg.generate().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = write_dataset(dir.path(), &ds).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back, ds);

        let header = fs::read_to_string(&paths.data).unwrap();
        assert!(header.starts_with("x_0,x_1,x_2,x_3,x_4,t,y\n"));
    }

    #[test]
    fn missing_sidecar_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_ground_truth(dir.path()), Err(Error::Config(_))));
    }
}
