//! Probability machinery shared by data generation and the model.

mod beta;
mod gaussian;
mod tilted;

pub use beta::{sample_beta, sample_gamma, BetaAssigner, MODE_CLAMP};
pub use gaussian::{
    gaussian_log_prob, normal_kl_on_tape, reparam_sample, standard_normal, DiagGaussian,
    GaussianVars,
};
pub use tilted::{
    expected_norm, ln_gamma_half, solve_optimal_norm, tilted_density, tilted_kl,
    tilted_kl_on_tape, TiltedGaussianPrior,
};
