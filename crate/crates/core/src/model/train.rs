use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::datagen::Observations;
use crate::error::{Error, Result};
use crate::gradcore::{adam_step, AdamConfig};
use crate::rng::labeled_rng;
use crate::Scalar;

use super::network::{ContiVaeModel, LossBreakdown};

/// Per-sample mean of each loss component over one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub total: f64,
    pub recon_x: f64,
    pub recon_t: f64,
    pub recon_y: f64,
    pub aux_t: f64,
    pub aux_y: f64,
    pub kl: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub epochs: Vec<EpochRecord>,
}

impl TrainTrace {
    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.total)
    }

    pub const CSV_HEADER: [&'static str; 8] = [
        "epoch", "total", "recon_x", "recon_t", "recon_y", "aux_t", "aux_y", "kl",
    ];
}

/// Mean and (population) standard deviation, with a unit scale for
/// constant outcomes.
pub(crate) fn standardization(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 0.0 && sd.is_finite() { sd } else { 1.0 })
}

/// Shuffled minibatch schedule for one epoch.
pub(crate) fn epoch_batches<R: rand::Rng + ?Sized>(
    n: usize,
    batch_size: usize,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

impl<T: Scalar> ContiVaeModel<T> {
    /// Minibatch Adam on the objective for `config.epochs` epochs. The first
    /// call fixes the outcome standardization from `obs`; later calls reuse
    /// it and continue from the stored optimizer state.
    pub fn train(&mut self, obs: &Observations) -> Result<TrainTrace> {
        if obs.is_empty() {
            return Err(Error::contract("cannot train on an empty dataset"));
        }
        self.check_dim(obs.dim())?;
        if self.output_scaling.is_none() {
            let (shift, scale) = standardization(&obs.y);
            self.set_output_scaling(shift, scale)?;
        }
        let cfg = self.config().clone();
        let adam_cfg = AdamConfig::with_lr(cfg.learning_rate);
        let start = self.adam.step;
        let mut shuffle = labeled_rng(cfg.seed, &format!("shuffle/{start}"));
        let mut noise = labeled_rng(cfg.seed, &format!("reparam/{start}"));
        let n = obs.len() as f64;
        let mut trace = TrainTrace::default();

        for epoch in 0..cfg.epochs {
            let mut acc = LossBreakdown::default();
            for (bi, batch) in epoch_batches(obs.len(), cfg.batch_size, &mut shuffle)
                .iter()
                .enumerate()
            {
                let ctx = || format!("epoch {}, batch {bi}", epoch + 1);
                let eps = self.draw_noise(batch.len(), &mut noise);
                let l = self
                    .compute_gradients(obs, batch, cfg.recon_scale, &eps)
                    .map_err(|e| e.with_context(ctx()))?;
                let (params, adam) = self.params_and_adam();
                adam_step(params, adam, &adam_cfg)?;
                acc.total += l.total;
                acc.recon_x += l.recon_x;
                acc.recon_t += l.recon_t;
                acc.recon_y += l.recon_y;
                acc.aux_t += l.aux_t;
                acc.aux_y += l.aux_y;
                acc.kl += l.kl;
            }
            let rec = EpochRecord {
                epoch: epoch + 1,
                total: acc.total / n,
                recon_x: acc.recon_x / n,
                recon_t: acc.recon_t / n,
                recon_y: acc.recon_y / n,
                aux_t: acc.aux_t / n,
                aux_y: acc.aux_y / n,
                kl: acc.kl / n,
            };
            log::debug!("epoch {} loss {:.6}", rec.epoch, rec.total);
            trace.epochs.push(rec);
        }
        Ok(trace)
    }
}
