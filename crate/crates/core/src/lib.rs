//! Individual dose-response curve estimation for continuous treatments under
//! unobserved confounding.
//!
//! The crate is organised bottom-up:
//!
//! * [`gradcore`]: a small tape-based reverse-mode differentiator and Adam.
//! * [`distributions`]: Gaussian log-densities, Beta dosage assignment and
//!   the tilted Gaussian latent prior.
//! * [`model`]: the ContiVAE encoder/decoder stack, its loss, training loop
//!   and counterfactual curve inference.
//! * [`baselines`]: the covariates-plus-dose MLP regressor.
//! * [`datagen`]: semi-synthetic benchmark generation with ground truth.
//! * [`eval`]: √MISE / √DPE metrics, k-fold selection and aggregation.
//!
//! Networks are generic over the floating point type through [`Scalar`];
//! the aliases below fix the common `f64` instantiation.

// `!(a >= b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod datagen;
pub mod distributions;
pub mod error;
pub mod eval;
pub mod gradcore;
pub mod model;
pub mod rng;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Dense differentiable tensor in double precision.
pub type Tensor = gradcore::Tensor<f64>;
/// Computation tape in double precision.
pub type Tape = gradcore::Tape<f64>;
/// ContiVAE in double precision (the default for training and evaluation).
pub type ContiVae = model::ContiVaeModel<f64>;
/// ContiVAE in single precision.
pub type ContiVae32 = model::ContiVaeModel<f32>;
/// MLP baseline in double precision.
pub type MlpBaseline = baselines::MlpBaseline<f64>;
/// MLP baseline in single precision.
pub type MlpBaseline32 = baselines::MlpBaseline<f32>;
