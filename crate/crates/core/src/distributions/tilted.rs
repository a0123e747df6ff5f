//! Exponentially tilted Gaussian prior.
//!
//! The tilted density is `ρτ(z) ∝ exp(τ‖z‖) · exp(−‖z‖²/2)`, which puts its
//! mode on the sphere `‖z‖ ≈ τ` instead of the origin. For an isotropic
//! Gaussian posterior the KL to this prior reduces to a term in the posterior
//! mean norm only, `½(‖μ‖ − ‖μ*τ‖)²`, where `‖μ*τ‖` minimises
//! `−τ·E‖z‖ + ‖μ‖²/2` with `z ~ N(μ, I)`. `E‖z‖` is the mean of a
//! noncentral chi distribution, `√(π/2)·L^{d/2−1}_{1/2}(−r²/2)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::gradcore::{Tape, Var};
use crate::Scalar;

const SERIES_CAP: usize = 200_000;

/// `ln Γ(d/2)` for a positive integer `d`, by the half-integer recurrence.
pub fn ln_gamma_half(d: usize) -> f64 {
    assert!(d >= 1, "ln_gamma_half needs d >= 1");
    // Γ(1/2) = √π, Γ(1) = 1, Γ(x + 1) = x Γ(x)
    let (mut acc, mut x) = if d % 2 == 1 {
        (0.5 * PI.ln(), 0.5)
    } else {
        (0.0, 1.0)
    };
    while x < d as f64 / 2.0 - 1e-9 {
        acc += x.ln();
        x += 1.0;
    }
    acc
}

/// `Γ((d+1)/2) / Γ(d/2)`.
fn half_gamma_ratio(d: usize) -> f64 {
    (ln_gamma_half(d + 1) - ln_gamma_half(d)).exp()
}

/// Mean norm of `z ~ N(μ, I_d)` with `‖μ‖ = r`.
///
/// Evaluated as `√2·Γ((d+1)/2)/Γ(d/2) · e^{−r²/2} · ₁F₁((d+1)/2; d/2; r²/2)`,
/// the Kummer-transformed form of the order-½ Laguerre function, so every
/// series term is positive. Terms are carried in log space.
pub fn expected_norm(r: f64, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::contract("expected_norm needs d >= 1"));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain {
            op: "expected_norm",
            detail: format!("radius {r} must be finite and non-negative"),
        });
    }
    let prefactor = std::f64::consts::SQRT_2 * half_gamma_ratio(d);
    let x = 0.5 * r * r;
    if x == 0.0 {
        return Ok(prefactor);
    }
    let (a, b) = ((d as f64 + 1.0) / 2.0, d as f64 / 2.0);
    let ln_x = x.ln();
    let mut ln_term = -x;
    let mut sum = ln_term.exp();
    for n in 0..SERIES_CAP {
        let nf = n as f64;
        let ratio_ln = ((a + nf) / (b + nf)).ln() + ln_x - (nf + 1.0).ln();
        ln_term += ratio_ln;
        let term = ln_term.exp();
        sum += term;
        let ratio = ratio_ln.exp();
        if nf > x && ratio < 1.0 {
            let tail = term * ratio / (1.0 - ratio);
            if tail <= 1e-14 * sum {
                return Ok(prefactor * sum);
            }
        }
    }
    Err(Error::Convergence(format!(
        "noncentral chi mean at r={r}, d={d} after {SERIES_CAP} terms"
    )))
}

fn objective(r: f64, tau: f64, d: usize) -> Result<f64> {
    Ok(-tau * expected_norm(r, d)? + 0.5 * r * r)
}

fn cache() -> &'static Mutex<HashMap<(u64, usize), f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, usize), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Radius minimising `φ(r) = −τ·E‖z‖(r, d) + r²/2` on `[0, τ + √d + 5]`.
///
/// A uniform scan brackets the minimum, then golden-section search refines
/// it to 1e-9. Results are memoised per `(τ, d)`.
pub fn solve_optimal_norm(tau: f64, d: usize) -> Result<f64> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::config(format!("tilt {tau} must be finite and >= 0")));
    }
    if d == 0 {
        return Err(Error::config("latent dimension must be >= 1"));
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    let key = (tau.to_bits(), d);
    if let Some(&r) = cache().lock().expect("cache poisoned").get(&key) {
        return Ok(r);
    }

    let upper = tau + (d as f64).sqrt() + 5.0;
    let n = 512;
    let step = upper / n as f64;
    let mut best = (0usize, objective(0.0, tau, d)?);
    for i in 1..=n {
        let v = objective(i as f64 * step, tau, d)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let mut lo = best.0.saturating_sub(1) as f64 * step;
    let mut hi = ((best.0 + 1).min(n)) as f64 * step;

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut e = lo + inv_phi * (hi - lo);
    let mut fc = objective(c, tau, d)?;
    let mut fe = objective(e, tau, d)?;
    while hi - lo > 1e-9 {
        if fc <= fe {
            hi = e;
            e = c;
            fe = fc;
            c = hi - inv_phi * (hi - lo);
            fc = objective(c, tau, d)?;
        } else {
            lo = c;
            c = e;
            fc = fe;
            e = lo + inv_phi * (hi - lo);
            fe = objective(e, tau, d)?;
        }
    }
    let mid = 0.5 * (lo + hi);
    // The boundary wins when φ is increasing from the origin.
    let r = if objective(0.0, tau, d)? <= objective(mid, tau, d)? {
        0.0
    } else {
        mid
    };
    cache().lock().expect("cache poisoned").insert(key, r);
    Ok(r)
}

/// Tilted Gaussian latent prior with its cached KL target radius and
/// log-normaliser.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedGaussianPrior {
    tau: f64,
    latent_dim: usize,
    optimal_norm: f64,
    ln_partition: f64,
}

impl TiltedGaussianPrior {
    pub fn new(tau: f64, latent_dim: usize) -> Result<Self> {
        let optimal_norm = solve_optimal_norm(tau, latent_dim)?;
        let ln_partition = ln_partition(tau, latent_dim);
        Ok(Self {
            tau,
            latent_dim,
            optimal_norm,
            ln_partition,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    /// `‖μ*τ‖`.
    pub fn optimal_norm(&self) -> f64 {
        self.optimal_norm
    }

    /// `ln Zτ` with `Zτ = E_{z~N(0,I)} exp(τ‖z‖)`.
    pub fn ln_partition(&self) -> f64 {
        self.ln_partition
    }
}

/// `ln E[exp(τ R)]` for `R ~ χ_d`, by Simpson's rule over the radial density.
fn ln_partition(tau: f64, d: usize) -> f64 {
    if tau == 0.0 {
        return 0.0;
    }
    let df = d as f64;
    let ln_norm = (df / 2.0 - 1.0) * 2f64.ln() + ln_gamma_half(d);
    let log_integrand = |r: f64| -> f64 {
        if r == 0.0 {
            return if d == 1 { -ln_norm } else { f64::NEG_INFINITY };
        }
        tau * r + (df - 1.0) * r.ln() - 0.5 * r * r - ln_norm
    };
    let peak = 0.5 * (tau + (tau * tau + 4.0 * (df - 1.0)).sqrt());
    let upper = peak + 40.0;
    let n = 40_000; // even
    let h = upper / n as f64;
    let logs: Vec<f64> = (0..=n).map(|i| log_integrand(i as f64 * h)).collect();
    let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut acc = 0.0;
    for (i, &l) in logs.iter().enumerate() {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * (l - shift).exp();
    }
    (acc * h / 3.0).ln() + shift
}

/// `ρτ(z) = exp(τ‖z‖ − ‖z‖²/2) / (Zτ (2π)^{d/2})`.
pub fn tilted_density(z: &[f64], prior: &TiltedGaussianPrior) -> Result<f64> {
    if z.len() != prior.latent_dim {
        return Err(Error::Dimension {
            op: "tilted_density",
            left: vec![z.len()],
            right: vec![prior.latent_dim],
        });
    }
    let sq: f64 = z.iter().map(|v| v * v).sum();
    let norm = sq.sqrt();
    let d = prior.latent_dim as f64;
    Ok((prior.tau * norm - 0.5 * sq - prior.ln_partition - 0.5 * d * (2.0 * PI).ln()).exp())
}

/// `½(‖μz‖ − ‖μ*τ‖)²`. The posterior scale does not enter.
pub fn tilted_kl<T: Scalar>(mu: &[T], prior: &TiltedGaussianPrior) -> Result<T> {
    if mu.len() != prior.latent_dim {
        return Err(Error::Dimension {
            op: "tilted_kl",
            left: vec![mu.len()],
            right: vec![prior.latent_dim],
        });
    }
    let norm = mu.iter().map(|&v| v * v).sum::<T>().sqrt();
    let gap = norm - T::of(prior.optimal_norm);
    Ok(T::of(0.5) * gap * gap)
}

/// Batched tilted KL: `mean` is `batch × d_z`; returns the sum over rows.
pub fn tilted_kl_on_tape<T: Scalar>(
    tape: &mut Tape<T>,
    mean: Var,
    prior: &TiltedGaussianPrior,
) -> Result<Var> {
    let sq = tape.square(mean);
    let row_sq = tape.sum_cols(sq)?;
    let norm = tape.sqrt(row_sq)?;
    let gap = tape.offset(norm, T::of(-prior.optimal_norm));
    let gap2 = tape.square(gap);
    let s = tape.sum(gap2);
    Ok(tape.scale(s, T::of(0.5)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_half_known_values() {
        assert!((ln_gamma_half(1) - 0.5 * PI.ln()).abs() < 1e-15);
        assert_eq!(ln_gamma_half(2), 0.0);
        assert!((ln_gamma_half(10) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma_half(5) - (0.75 * PI.sqrt()).ln()).abs() < 1e-14);
    }

    #[test]
    fn expected_norm_closed_forms() {
        let e2 = expected_norm(0.0, 2).unwrap();
        assert!((e2 - (PI / 2.0).sqrt()).abs() < 1e-14);
        let e1 = expected_norm(0.0, 1).unwrap();
        assert!((e1 - (2.0 / PI).sqrt()).abs() < 1e-14);
        // 1-D folded normal mean: √(2/π) e^{−r²/2} + r(1 − 2Φ(−r)); at r = 1
        // Φ(−1) = 0.158655253931457.
        let r: f64 = 1.0;
        let folded = (2.0 / PI).sqrt() * (-0.5 * r * r).exp() + r * (1.0 - 2.0 * 0.158_655_253_931_457);
        assert!((expected_norm(r, 1).unwrap() - folded).abs() < 1e-12);
    }

    #[test]
    fn expected_norm_large_radius_asymptote() {
        let v = expected_norm(10.0, 2).unwrap();
        assert!((v - 10.05).abs() < 0.005, "{v}");
    }

    #[test]
    fn expected_norm_rejects_bad_input() {
        assert!(expected_norm(-1.0, 3).is_err());
        assert!(expected_norm(1.0, 0).is_err());
    }

    #[test]
    fn zero_tilt_solves_to_origin() {
        for d in [1, 2, 5, 20, 64] {
            assert_eq!(solve_optimal_norm(0.0, d).unwrap(), 0.0);
        }
    }

    #[test]
    fn optimum_is_a_local_minimum() {
        for (tau, d) in [(3.0, 2), (3.0, 1), (3.0, 5), (6.0, 20), (3.0, 20)] {
            let r = solve_optimal_norm(tau, d).unwrap();
            let f = |x: f64| objective(x, tau, d).unwrap();
            assert!(f(r) <= f(r + 1e-3), "tau={tau} d={d} r={r}");
            if r >= 1e-3 {
                assert!(f(r) <= f(r - 1e-3), "tau={tau} d={d} r={r}");
            }
        }
    }

    #[test]
    fn kl_zero_at_target_norm() {
        let prior = TiltedGaussianPrior::new(3.0, 2).unwrap();
        let r = prior.optimal_norm();
        assert!(r > 0.0);
        assert_eq!(tilted_kl(&[r, 0.0], &prior).unwrap(), 0.0);
        assert!(tilted_kl(&[r, 0.5], &prior).unwrap() > 0.0);
    }

    #[test]
    fn zero_tilt_density_is_standard_normal() {
        let prior = TiltedGaussianPrior::new(0.0, 3).unwrap();
        let z = [0.3, -1.2, 0.5];
        let sq: f64 = z.iter().map(|v| v * v).sum();
        let expect = (-0.5 * sq).exp() / (2.0 * PI).powf(1.5);
        assert!((tilted_density(&z, &prior).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn tilt_moves_mass_outward() {
        let prior = TiltedGaussianPrior::new(3.0, 2).unwrap();
        let at_origin = tilted_density(&[0.0, 0.0], &prior).unwrap();
        let on_shell = tilted_density(&[3.0, 0.0], &prior).unwrap();
        assert!(on_shell > at_origin);
    }
}
