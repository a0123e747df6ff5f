//! Counterfactual curve inference: encode `x` along the predicted-mean path,
//! sample the latent posterior and average the outcome head.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::datagen::Matrix;
use crate::distributions::standard_normal;
use crate::error::{Error, Result};
use crate::rng::labeled_rng;
use crate::Scalar;

use super::network::ContiVaeModel;

/// `n` evenly spaced doses covering `[0, 1]`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// First index of the maximum, so ties resolve to the smallest dose.
pub fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(b) if v <= values[b] => {}
            _ => best = Some(i),
        }
    }
    best
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::contract("dose grid is empty"));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::contract("dose grid must be sorted"));
    }
    Ok(())
}

impl<T: Scalar> ContiVaeModel<T> {
    /// Monte-Carlo curve for one covariate row with `l` latent draws.
    /// `noise_scale` multiplies the posterior spread; 0 collapses every
    /// draw onto the posterior mean.
    pub fn predict_curve_with<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        grid: &[f64],
        l: usize,
        noise_scale: f64,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        check_grid(grid)?;
        if l == 0 {
            return Err(Error::contract("need at least one latent sample"));
        }
        let row = Matrix::new(1, x.len(), x.to_vec())?;
        let enc = self.encode(&row, None, None)?;
        let d_z = self.config().latent_dim;
        let (mu, sd) = (enc.z_mean.row(0), enc.z_std.row(0));
        let mut z = Vec::with_capacity(l * d_z);
        for _ in 0..l {
            for k in 0..d_z {
                let e: f64 = standard_normal(rng);
                z.push(mu[k] + noise_scale * sd[k] * e);
            }
        }
        let means = self.outcome_means(&z, l, grid)?;
        Ok(means
            .chunks(l)
            .map(|c| c.iter().sum::<f64>() / l as f64)
            .collect())
    }

    fn sample_rng(&self, i: usize) -> ChaCha8Rng {
        let mut rng = labeled_rng(self.config().seed, "predict");
        rng.set_stream(i as u64);
        rng
    }

    /// Curve for row `i` of a covariate matrix using `config.mc_samples`
    /// draws from that row's own random stream.
    pub fn predict_curve(&self, x: &Matrix, i: usize, grid: &[f64]) -> Result<Vec<f64>> {
        let l = self.config().mc_samples;
        self.predict_curve_with(x.row(i), grid, l, 1.0, &mut self.sample_rng(i))
    }

    pub fn predict_curves(&self, x: &Matrix, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
        (0..x.rows()).map(|i| self.predict_curve(x, i, grid)).collect()
    }

    /// Grid argmax of the predicted curve for row `i`; ties go to the
    /// smallest dose.
    pub fn predicted_optimal_dose(
        &self,
        x: &Matrix,
        i: usize,
        grid_size: usize,
    ) -> Result<(f64, f64)> {
        if grid_size < 2 {
            return Err(Error::contract("optimal-dose grid needs at least 2 points"));
        }
        let grid = uniform_grid(grid_size);
        let curve = self.predict_curve(x, i, &grid)?;
        let k = argmax_first(&curve).expect("nonempty grid");
        Ok((grid[k], curve[k]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ContiVaeConfig;
    use crate::rng::rng_from_seed;

    fn model() -> ContiVaeModel<f64> {
        ContiVaeModel::new(ContiVaeConfig {
            covariate_dim: 3,
            latent_dim: 2,
            hidden_units: 6,
            mc_samples: 7,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn argmax_ties_go_left() {
        assert_eq!(argmax_first(&[1.0, 1.0, 1.0]), Some(0));
        assert_eq!(argmax_first(&[0.0, 0.5, 1.0]), Some(2));
        assert_eq!(argmax_first(&[0.0, 2.0, 1.0, 2.0]), Some(1));
        assert_eq!(argmax_first(&[]), None);
    }

    #[test]
    fn grid_endpoints() {
        let g = uniform_grid(65);
        assert_eq!((g[0], g[64], g[32]), (0.0, 1.0, 0.5));
    }

    #[test]
    fn collapsed_posterior_equals_outcome_mean_at_latent_mean() {
        let m = model();
        let x = [0.2, 0.5, 0.3];
        let grid = uniform_grid(9);
        let c = m
            .predict_curve_with(&x, &grid, 1, 0.0, &mut rng_from_seed(0))
            .unwrap();
        let enc = m.encode(&Matrix::new(1, 3, x.to_vec()).unwrap(), None, None).unwrap();
        let z = Matrix::new(grid.len(), 2, enc.z_mean.row(0).repeat(grid.len())).unwrap();
        let dec = m.decode(&z, &grid).unwrap();
        assert_eq!(c, dec.y_mean);
    }

    #[test]
    fn curves_have_grid_length_and_are_reproducible() {
        let m = model();
        let x = Matrix::new(2, 3, vec![0.1, 0.2, 0.3, 0.9, 0.1, 0.0]).unwrap();
        let grid = uniform_grid(17);
        let a = m.predict_curves(&x, &grid).unwrap();
        assert_eq!(a.len(), 2);
        assert!(a.iter().all(|c| c.len() == 17));
        assert_eq!(a, m.predict_curves(&x, &grid).unwrap());
        // row results do not depend on which other rows are predicted
        let single = m.predict_curve(&x, 1, &grid).unwrap();
        assert_eq!(single, a[1]);
    }

    #[test]
    fn unsorted_grid_rejected() {
        let m = model();
        let x = Matrix::new(1, 3, vec![0.0; 3]).unwrap();
        assert!(m.predict_curve(&x, 0, &[0.5, 0.1]).is_err());
        assert!(m.predicted_optimal_dose(&x, 0, 1).is_err());
    }
}
