use std::path::{Path, PathBuf};

use log::warn;
use rand::Rng;

use crate::distributions::standard_normal;
use crate::error::{Error, Result};

use super::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub enum CovariateSource {
    /// Entries `U[0, 1]`, then the standard normalisation.
    UnitNormUniform,
    /// A numeric CSV (optional header row), then the standard normalisation.
    Csv(PathBuf),
}

/// Per-feature min-max scaling to [0, 1] followed by scaling each row to unit
/// Euclidean norm. Constant features skip the min-max step; a row that is
/// all zero after scaling becomes the uniform unit direction `1/√d`.
pub fn normalize_covariates(x: &mut Matrix) {
    let (n, d) = (x.rows(), x.cols());
    for j in 0..d {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let v = x.get(i, j);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !(hi > lo) {
            warn!("feature {j} is constant ({lo}); skipping min-max scaling");
            continue;
        }
        let span = hi - lo;
        for i in 0..n {
            let v = x.get(i, j);
            x.set(i, j, (v - lo) / span);
        }
    }
    for i in 0..n {
        let row = x.row_mut(i);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        } else {
            warn!("row {i} is all zero; using the uniform direction");
            let v = 1.0 / (d as f64).sqrt();
            row.iter_mut().for_each(|x| *x = v);
        }
    }
}

/// Reads a numeric matrix. A first line that does not parse as numbers is
/// treated as a header.
pub fn load_csv_matrix(path: &Path) -> Result<Matrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::parse(path, e))?;
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, e))?;
        let parsed: std::result::Result<Vec<f64>, _> =
            rec.iter().map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if line == 0 => continue,
            Err(e) => return Err(Error::parse(path, format!("line {}: {e}", line + 1))),
        }
    }
    if rows.is_empty() {
        return Err(Error::parse(path, "no numeric rows"));
    }
    Matrix::from_rows(&rows).map_err(|e| Error::parse(path, e))
}

pub fn gen_covariates<R: Rng + ?Sized>(
    n: usize,
    d_x: usize,
    source: &CovariateSource,
    rng: &mut R,
) -> Result<Matrix> {
    if n == 0 || d_x == 0 {
        return Err(Error::config("covariate count and dimension must be positive"));
    }
    let mut x = match source {
        CovariateSource::UnitNormUniform => {
            let data = (0..n * d_x).map(|_| rng.random::<f64>()).collect();
            Matrix::new(n, d_x, data)?
        }
        CovariateSource::Csv(path) => {
            let m = load_csv_matrix(path)?;
            if m.cols() != d_x {
                return Err(Error::config(format!(
                    "{} has {} columns, expected {d_x}",
                    path.display(),
                    m.cols()
                )));
            }
            if m.rows() < n {
                return Err(Error::config(format!(
                    "{} has {} rows, need {n}",
                    path.display(),
                    m.rows()
                )));
            }
            m.select_rows(&(0..n).collect::<Vec<_>>())
        }
    };
    normalize_covariates(&mut x);
    Ok(x)
}

/// Hidden confounders together with their observable proxies.
#[derive(Debug, Clone)]
pub struct ProxyCovariates {
    /// `n × d_u` confounders `u ~ N(0, I)`.
    pub hidden: Matrix,
    /// `n × d_x` proxies before normalisation, `softplus(A u + η)`.
    pub raw: Matrix,
    /// `raw` after min-max and row normalisation.
    pub x: Matrix,
}

/// Draws `u ~ N(0, I_{d_u})` and proxies `x = softplus(A u + η)` with a
/// fixed random `d_x × d_u` loading matrix `A` (entries with standard
/// deviation `1/√d_u`) and `η ~ N(0, proxy_noise_sd² I)`.
pub fn gen_hidden_confounders<R: Rng + ?Sized>(
    n: usize,
    d_u: usize,
    d_x: usize,
    proxy_noise_sd: f64,
    rng: &mut R,
) -> Result<ProxyCovariates> {
    if n == 0 || d_u == 0 || d_x == 0 {
        return Err(Error::config("confounder dimensions must be positive"));
    }
    if !(proxy_noise_sd >= 0.0) {
        return Err(Error::config("proxy noise must be non-negative"));
    }
    let load_sd = 1.0 / (d_u as f64).sqrt();
    let a: Vec<f64> = (0..d_x * d_u)
        .map(|_| load_sd * standard_normal::<f64, _>(rng))
        .collect();
    let a = Matrix::new(d_x, d_u, a)?;
    let u: Vec<f64> = (0..n * d_u).map(|_| standard_normal(rng)).collect();
    let hidden = Matrix::new(n, d_u, u)?;

    let mut raw = Matrix::zeros(n, d_x);
    for i in 0..n {
        let pre = a.mul_vec(hidden.row(i));
        for (j, p) in pre.into_iter().enumerate() {
            let noisy = p + proxy_noise_sd * standard_normal::<f64, _>(rng);
            raw.set(i, j, noisy.max(0.0) + (-noisy.abs()).exp().ln_1p());
        }
    }
    let mut x = raw.clone();
    normalize_covariates(&mut x);
    Ok(ProxyCovariates { hidden, raw, x })
}
