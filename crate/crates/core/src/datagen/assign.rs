use std::path::PathBuf;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{sample_beta, standard_normal, BetaAssigner};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

use super::{
    gen_covariates, gen_hidden_confounders, load_csv_matrix, normalize_covariates, train_test_split,
    CovariateSource, CurveFamily, CurveSpec, CurveStyle, Dataset, DatasetMeta, GroundTruth,
    Matrix, Observations, XLikelihood,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignParams {
    pub alpha: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

/// Assigns each sample a dose `t ~ Beta(α, β(t*))` centred on its optimal
/// dose and observes `y = f(x, u, t) + ε`, `ε ~ N(0, noise_sd²)`.
///
/// Sample `i` draws from its own ChaCha stream, so the output does not
/// depend on evaluation order.
pub fn assign_and_observe(
    spec: &CurveSpec,
    x: &Matrix,
    hidden: Option<&Matrix>,
    params: &AssignParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(params.alpha >= 1.0) {
        return Err(Error::config(format!("alpha = {} must be >= 1", params.alpha)));
    }
    if !(params.noise_sd >= 0.0) {
        return Err(Error::config("noise_sd must be non-negative"));
    }
    let n = x.rows();
    let (mut t, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(i as u64);
        let c = spec.coefficients(x.row(i), hidden.map(|u| u.row(i)))?;
        let mode = spec.optimal_dose(&c).t;
        let ti = sample_beta(&BetaAssigner::new(params.alpha, mode), &mut rng)
            .map_err(|e| Error::contract(format!("sample {i}: {e}")))?;
        let noise: f64 = standard_normal(&mut rng);
        t.push(ti);
        y.push(spec.eval_coeffs(&c, ti) + params.noise_sd * noise);
    }
    Ok((t, y))
}

fn default_noise_sd() -> f64 {
    0.02f64.sqrt()
}

fn default_min_denominator() -> f64 {
    1e-8
}

/// Full recipe for one semi-synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub style: CurveStyle,
    pub family: CurveFamily,
    pub n: usize,
    pub d_x: usize,
    pub d_u: usize,
    pub alpha: f64,
    pub scale: f64,
    pub noise_sd: f64,
    pub proxy_noise_sd: f64,
    pub test_frac: f64,
    pub seed: u64,
    /// CSV of raw covariates; synthetic covariates when absent.
    pub covariates_csv: Option<PathBuf>,
    /// CSV of hidden confounders matching `covariates_csv` (news style).
    pub hidden_csv: Option<PathBuf>,
    pub min_denominator: f64,
    pub x_likelihood: XLikelihood,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            style: CurveStyle::News,
            family: CurveFamily::Cubic,
            n: 1000,
            d_x: 50,
            d_u: 10,
            alpha: 1.0,
            scale: 10.0,
            noise_sd: default_noise_sd(),
            proxy_noise_sd: 0.0,
            test_frac: 0.2,
            seed: 0,
            covariates_csv: None,
            hidden_csv: None,
            min_denominator: default_min_denominator(),
            x_likelihood: XLikelihood::Gaussian,
        }
    }
}

impl GenerateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 1.0) {
            return Err(Error::config(format!("alpha = {} must be >= 1", self.alpha)));
        }
        if self.n < 2 || self.d_x == 0 {
            return Err(Error::config("need n >= 2 and d_x >= 1"));
        }
        if self.style == CurveStyle::News && self.d_u == 0 && self.hidden_csv.is_none() {
            return Err(Error::config("news style needs d_u >= 1"));
        }
        if !(self.test_frac > 0.0 && self.test_frac < 1.0) {
            return Err(Error::config("test_frac must lie in (0, 1)"));
        }
        if !(self.noise_sd >= 0.0) || !(self.scale.is_finite()) {
            return Err(Error::config("noise_sd must be >= 0 and scale finite"));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<Dataset> {
        self.validate()?;
        let seed = |label: &str| derive_seed(self.seed, label);
        let mut cov_rng = rng_from_seed(seed("covariates"));

        let (x, hidden) = match (self.style, &self.covariates_csv) {
            (CurveStyle::Tcga, None) => (
                gen_covariates(self.n, self.d_x, &CovariateSource::UnitNormUniform, &mut cov_rng)?,
                None,
            ),
            (CurveStyle::Tcga, Some(p)) => (
                gen_covariates(self.n, self.d_x, &CovariateSource::Csv(p.clone()), &mut cov_rng)?,
                None,
            ),
            (CurveStyle::News, None) => {
                let p = gen_hidden_confounders(
                    self.n,
                    self.d_u,
                    self.d_x,
                    self.proxy_noise_sd,
                    &mut cov_rng,
                )?;
                (p.x, Some(p.hidden))
            }
            (CurveStyle::News, Some(p)) => {
                let Some(hp) = &self.hidden_csv else {
                    return Err(Error::config("news style with CSV covariates needs hidden_csv"));
                };
                let mut x = load_csv_matrix(p)?;
                let u = load_csv_matrix(hp)?;
                if x.rows() < self.n || u.rows() < self.n || x.cols() != self.d_x {
                    return Err(Error::config("covariate/hidden CSV shapes do not match config"));
                }
                let idx: Vec<usize> = (0..self.n).collect();
                x = x.select_rows(&idx);
                normalize_covariates(&mut x);
                (x, Some(u.select_rows(&idx)))
            }
        };

        let curve = CurveSpec::sample(
            self.family,
            self.style,
            self.scale,
            seed("curve"),
            &x,
            hidden.as_ref(),
            self.min_denominator,
        )?;
        let (t, y) = assign_and_observe(
            &curve,
            &x,
            hidden.as_ref(),
            &AssignParams {
                alpha: self.alpha,
                noise_sd: self.noise_sd,
                seed: seed("assign"),
            },
        )?;
        let split = train_test_split(self.n, self.test_frac, &mut rng_from_seed(seed("split")))?;
        let d_u = hidden.as_ref().map_or(0, Matrix::cols);
        Ok(Dataset {
            obs: Observations::new(x, t, y)?,
            truth: GroundTruth { curve, hidden },
            meta: DatasetMeta {
                seed: self.seed,
                style: self.style,
                family: self.family,
                n: self.n,
                d_x: self.d_x,
                d_u,
                alpha: self.alpha,
                scale: self.scale,
                noise_sd: self.noise_sd,
                x_likelihood: self.x_likelihood,
                test_frac: self.test_frac,
                train_idx: split.train,
                test_idx: split.test,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(alpha: f64, noise_sd: f64) -> GenerateConfig {
        GenerateConfig {
            style: CurveStyle::Tcga,
            family: CurveFamily::Quadratic,
            n: 400,
            d_x: 6,
            d_u: 0,
            alpha,
            scale: 10.0,
            noise_sd,
            proxy_noise_sd: 0.0,
            test_frac: 0.2,
            seed: 17,
            covariates_csv: None,
            hidden_csv: None,
            min_denominator: 1e-8,
            x_likelihood: XLikelihood::Gaussian,
        }
    }

    #[test]
    fn noiseless_outcomes_equal_curve() {
        let ds = cfg(2.0, 0.0).generate().unwrap();
        for i in 0..ds.len() {
            let f = ds.truth.response(i, ds.obs.x.row(i), ds.obs.t[i]).unwrap();
            assert_eq!(ds.obs.y[i], f);
        }
    }

    #[test]
    fn doses_in_open_unit_interval() {
        let ds = cfg(4.0, 0.1).generate().unwrap();
        assert!(ds.obs.t.iter().all(|&t| t > 0.0 && t < 1.0));
        assert_eq!(ds.meta.test_idx.len(), 80);
    }

    #[test]
    fn alpha_below_one_rejected_up_front() {
        assert!(matches!(cfg(0.5, 0.1).generate(), Err(Error::Config(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = cfg(3.0, 0.1).generate().unwrap();
        let b = cfg(3.0, 0.1).generate().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn news_style_keeps_hidden_out_of_observations() {
        let mut c = cfg(2.0, 0.1);
        c.style = CurveStyle::News;
        c.d_u = 3;
        let ds = c.generate().unwrap();
        assert_eq!(ds.truth.hidden.as_ref().unwrap().cols(), 3);
        assert_eq!(ds.obs.x.cols(), 6);
    }
}
