use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gradcore::{Tape, Var};
use crate::Scalar;

const HALF_LN_TAU: f64 = 0.918_938_533_204_672_8;

/// Diagonal Gaussian with strictly positive standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagGaussian<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> DiagGaussian<T> {
    pub fn new(mean: Vec<T>, std: Vec<T>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::Dimension {
                op: "DiagGaussian",
                left: vec![mean.len()],
                right: vec![std.len()],
            });
        }
        if let Some(s) = std.iter().find(|&&s| !(s > T::zero())) {
            return Err(Error::contract(format!("standard deviation {s} is not positive")));
        }
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// `Σ_i −½ln2π − ln σ_i − (x_i−μ_i)²/(2σ_i²)`.
pub fn gaussian_log_prob<T: Scalar>(x: &[T], g: &DiagGaussian<T>) -> Result<T> {
    if x.len() != g.dim() {
        return Err(Error::Dimension {
            op: "gaussian_log_prob",
            left: vec![x.len()],
            right: vec![g.dim()],
        });
    }
    let half_ln_tau = T::of(HALF_LN_TAU);
    let half = T::of(0.5);
    let mut acc = T::zero();
    for ((&xi, &mu), &s) in x.iter().zip(&g.mean).zip(&g.std) {
        if !(s > T::zero()) {
            return Err(Error::contract(format!("standard deviation {s} is not positive")));
        }
        let d = (xi - mu) / s;
        acc += -half_ln_tau - s.ln() - half * d * d;
    }
    Ok(acc)
}

pub fn standard_normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::of(rng.sample::<f64, _>(StandardNormal))
}

/// `μ + σ∘ε` with `ε ~ N(0, I)`.
pub fn reparam_sample<T: Scalar, R: Rng + ?Sized>(g: &DiagGaussian<T>, rng: &mut R) -> Vec<T> {
    g.mean
        .iter()
        .zip(&g.std)
        .map(|(&m, &s)| m + s * standard_normal::<T, _>(rng))
        .collect()
}

/// Mean and standard deviation nodes of a batched diagonal Gaussian.
#[derive(Debug, Clone, Copy)]
pub struct GaussianVars {
    pub mean: Var,
    pub std: Var,
}

impl GaussianVars {
    /// Differentiable log-density of `x`, summed over every entry.
    pub fn log_prob<T: Scalar>(&self, tape: &mut Tape<T>, x: Var) -> Result<Var> {
        let diff = tape.sub(x, self.mean)?;
        let z = tape.div(diff, self.std)?;
        let z2 = tape.square(z);
        let quad = tape.scale(z2, T::of(-0.5));
        let log_std = tape.log(self.std)?;
        let per = tape.sub(quad, log_std)?;
        let per = tape.offset(per, T::of(-HALF_LN_TAU));
        Ok(tape.sum(per))
    }

    /// `μ + σ∘ε` on the tape; `eps` is a constant of matching shape.
    pub fn reparam<T: Scalar>(&self, tape: &mut Tape<T>, eps: Var) -> Result<Var> {
        let noise = tape.mul(self.std, eps)?;
        tape.add(self.mean, noise)
    }
}

/// Closed-form `KL(N(μ, σ²) ‖ N(0, I))` summed over all entries.
pub fn normal_kl_on_tape<T: Scalar>(tape: &mut Tape<T>, q: &GaussianVars) -> Result<Var> {
    let m2 = tape.square(q.mean);
    let s2 = tape.square(q.std);
    let log_s = tape.log(q.std)?;
    let two_log_s = tape.scale(log_s, T::of(2.0));
    let a = tape.add(m2, s2)?;
    let b = tape.sub(a, two_log_s)?;
    let c = tape.offset(b, -T::one());
    let s = tape.sum(c);
    Ok(tape.scale(s, T::of(0.5)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcore::Tensor;
    use crate::rng::rng_from_seed;

    #[test]
    fn log_prob_at_mean_and_one_sigma() {
        let g = DiagGaussian::new(vec![0.3f64], vec![1.0]).unwrap();
        let lp = gaussian_log_prob(&[0.3], &g).unwrap();
        assert!((lp + 0.918_938_533_204_672_7).abs() < 1e-14);

        let s: f64 = 2.5;
        let g = DiagGaussian::new(vec![1.0], vec![s]).unwrap();
        let lp = gaussian_log_prob(&[1.0 + s], &g).unwrap();
        let expect = -0.5 * (2.0 * std::f64::consts::PI).ln() - s.ln() - 0.5;
        assert!((lp - expect).abs() < 1e-14);
    }

    #[test]
    fn non_positive_sigma_is_rejected() {
        assert!(matches!(
            DiagGaussian::new(vec![0.0], vec![0.0]),
            Err(Error::Contract(_))
        ));
        let g = DiagGaussian {
            mean: vec![0.0],
            std: vec![-1.0],
        };
        assert!(matches!(gaussian_log_prob(&[0.0], &g), Err(Error::Contract(_))));
    }

    #[test]
    fn degenerate_sigma_sample_is_mean() {
        let g = DiagGaussian::new(vec![1.5, -2.0], vec![1e-300, 1e-300]).unwrap();
        let mut rng = rng_from_seed(1);
        assert_eq!(reparam_sample(&g, &mut rng), vec![1.5, -2.0]);
    }

    #[test]
    fn sample_mean_converges() {
        let (mu, s) = (0.7, 2.0);
        let g = DiagGaussian::new(vec![mu], vec![s]).unwrap();
        let mut rng = rng_from_seed(11);
        let n = 100_000;
        let mean = (0..n).map(|_| reparam_sample(&g, &mut rng)[0]).sum::<f64>() / n as f64;
        assert!((mean - mu).abs() < 4.0 * s / (n as f64).sqrt());
    }

    #[test]
    fn tape_log_prob_matches_plain_and_has_unit_mean_gradient() {
        let (x, mu, s): (Vec<f64>, Vec<f64>, Vec<f64>) = (vec![0.2, -1.0], vec![0.5, 0.0], vec![0.7, 1.3]);
        let plain =
            gaussian_log_prob(&x, &DiagGaussian::new(mu.clone(), s.clone()).unwrap()).unwrap();
        let mut tape = Tape::new();
        let xv = tape.constant(vec![1, 2], x).unwrap();
        let mv = tape.leaf(&Tensor::matrix(1, 2, mu).unwrap().with_grad());
        let sv = tape.leaf(&Tensor::matrix(1, 2, s).unwrap());
        let q = GaussianVars { mean: mv, std: sv };
        let lp = q.log_prob(&mut tape, xv).unwrap();
        assert!((tape.scalar(lp) - plain).abs() < 1e-14);

        // d(μ + σε)/dμ = 1
        let eps = tape.constant(vec![1, 2], vec![0.3, -0.4]).unwrap();
        let z = q.reparam(&mut tape, eps).unwrap();
        let l = tape.sum(z);
        let g = tape.backward(l).unwrap();
        assert_eq!(g.get(mv).unwrap(), &[1.0, 1.0]);
    }

    #[test]
    fn normal_kl_vanishes_at_standard_normal() {
        let mut tape = Tape::<f64>::new();
        let m = tape.constant(vec![1, 3], vec![0.0; 3]).unwrap();
        let s = tape.constant(vec![1, 3], vec![1.0; 3]).unwrap();
        let kl = normal_kl_on_tape(&mut tape, &GaussianVars { mean: m, std: s }).unwrap();
        assert_eq!(tape.scalar(kl), 0.0);
    }
}
