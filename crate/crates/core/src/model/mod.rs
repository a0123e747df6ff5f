//! ContiVAE: a variational autoencoder over covariates, dose and outcome
//! whose latent code stands in for the hidden confounders.

mod checkpoint;
mod config;
mod infer;
pub mod layers;
mod network;
mod train;

pub use checkpoint::{Checkpoint, OptimizerSnapshot, CHECKPOINT_VERSION};
pub use config::{config_hash, ContiVaeConfig, PriorKind};
pub use infer::{argmax_first, uniform_grid};
pub use network::{parameter_count, ContiVaeModel, Decoding, Encoding, LossBreakdown};
pub use train::{EpochRecord, TrainTrace};

pub(crate) use checkpoint::precision_name;
pub(crate) use infer::check_grid;
pub(crate) use train::{epoch_batches, standardization};
