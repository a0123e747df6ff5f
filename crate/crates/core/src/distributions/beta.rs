use rand::Rng;

use crate::error::{Error, Result};

use super::gaussian::standard_normal;

/// Modes are clamped into this interval before the rate is derived, since
/// `β` diverges as the mode approaches 0.
pub const MODE_CLAMP: (f64, f64) = (0.01, 0.99);

/// Dosage assignment `Beta(α, β)` whose mode sits at a target dose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaAssigner {
    pub alpha: f64,
    pub mode: f64,
}

impl BetaAssigner {
    pub fn new(alpha: f64, mode: f64) -> Self {
        Self { alpha, mode }
    }

    /// `β = (α−1)/t* + 2 − α` with `t*` clamped to [`MODE_CLAMP`].
    pub fn beta(&self) -> Result<f64> {
        if !(self.alpha >= 1.0) || !self.alpha.is_finite() {
            return Err(Error::contract(format!(
                "selection bias alpha = {} must be >= 1",
                self.alpha
            )));
        }
        let mode = self.mode.clamp(MODE_CLAMP.0, MODE_CLAMP.1);
        let beta = (self.alpha - 1.0) / mode + 2.0 - self.alpha;
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::contract(format!(
                "beta = {beta} from alpha = {}, mode = {mode}",
                self.alpha
            )));
        }
        Ok(beta)
    }
}

/// Marsaglia–Tsang gamma variate with unit scale.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let u: f64 = rng.random();
        return sample_gamma(shape + 1.0, rng) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = standard_normal(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.random();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// One draw from `Beta(α, β)` as a ratio of two gamma variates.
pub fn sample_beta<R: Rng + ?Sized>(a: &BetaAssigner, rng: &mut R) -> Result<f64> {
    let beta = a.beta()?;
    let x = sample_gamma(a.alpha, rng);
    let y = sample_gamma(beta, rng);
    Ok(x / (x + y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn beta_formula() {
        assert_eq!(BetaAssigner::new(2.0, 0.5).beta().unwrap(), 2.0);
        assert_eq!(BetaAssigner::new(4.0, 0.25).beta().unwrap(), 10.0);
        assert_eq!(BetaAssigner::new(1.0, 0.7).beta().unwrap(), 1.0);
    }

    #[test]
    fn mode_of_assigned_beta_is_target() {
        for (alpha, mode) in [(2.0, 0.3), (3.5, 0.8), (4.0, 0.5)] {
            let b = BetaAssigner::new(alpha, mode).beta().unwrap();
            let m = (alpha - 1.0) / (alpha + b - 2.0);
            assert!((m - mode).abs() < 1e-12);
        }
    }

    #[test]
    fn extreme_modes_are_clamped() {
        let b0 = BetaAssigner::new(3.0, 0.0).beta().unwrap();
        assert!((b0 - (2.0 / 0.01 - 1.0)).abs() < 1e-9);
        let b1 = BetaAssigner::new(3.0, 1.0).beta().unwrap();
        assert!(b1 > 0.0);
    }

    #[test]
    fn alpha_below_one_is_rejected() {
        let mut rng = rng_from_seed(0);
        assert!(matches!(
            sample_beta(&BetaAssigner::new(0.5, 0.5), &mut rng),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn gamma_mean_matches_shape() {
        let mut rng = rng_from_seed(5);
        for shape in [0.5, 1.0, 3.0, 12.0] {
            let n = 50_000;
            let m = (0..n).map(|_| sample_gamma(shape, &mut rng)).sum::<f64>() / n as f64;
            // Var = shape
            assert!((m - shape).abs() < 5.0 * (shape / n as f64).sqrt(), "{shape}: {m}");
        }
    }

    #[test]
    fn beta_empirical_mean_and_mode() {
        let mut rng = rng_from_seed(9);
        let a = BetaAssigner::new(2.0, 0.5);
        let b = a.beta().unwrap();
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_beta(&a, &mut rng).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let (al, be) = (2.0, b);
        let var = al * be / ((al + be).powi(2) * (al + be + 1.0));
        assert!((mean - al / (al + be)).abs() < 4.0 * (var / n as f64).sqrt());

        let mut hist = [0usize; 20];
        for d in &draws {
            hist[((d * 20.0) as usize).min(19)] += 1;
        }
        let peak = hist.iter().enumerate().max_by_key(|(_, &c)| c).unwrap().0;
        let centre = (peak as f64 + 0.5) / 20.0;
        assert!((centre - 0.5).abs() <= 0.1, "histogram peak at {centre}");
    }
}
