use crate::baselines::MlpBaselineConfig;
use crate::datagen::{kfold, Dataset};
use crate::error::{Error, Result};
use crate::model::{parameter_count, ContiVaeConfig};
use crate::rng::labeled_rng;

use super::evaluate::evaluate_model;
use super::predictor::CurvePredictor;

/// Tie-breaking keys for model selection.
pub trait CvCandidate {
    fn parameter_count(&self) -> usize;
    /// λ; models without a reconstruction term report 1.
    fn recon_scale(&self) -> f64 {
        1.0
    }
}

impl CvCandidate for ContiVaeConfig {
    fn parameter_count(&self) -> usize {
        parameter_count(
            self.covariate_dim,
            self.latent_dim,
            self.hidden_units,
            self.hidden_layers,
        )
    }

    fn recon_scale(&self) -> f64 {
        self.recon_scale
    }
}

impl CvCandidate for MlpBaselineConfig {
    fn parameter_count(&self) -> usize {
        let (d, h, l) = (self.covariate_dim + 1, self.hidden_units, self.hidden_layers);
        d * h + h + (l - 1) * (h * h + h) + h + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub best: usize,
    /// Mean validation √MISE per candidate, in input order.
    pub scores: Vec<f64>,
}

/// k-fold selection by mean validation √MISE. Ties (exact equality) go to
/// fewer parameters, then lower λ, then the earlier candidate.
pub fn cross_validate<C, P, F>(
    candidates: &[C],
    train: &Dataset,
    folds: usize,
    grid_size: usize,
    seed: u64,
    mut fit: F,
) -> Result<CvOutcome>
where
    C: CvCandidate,
    P: CurvePredictor,
    F: FnMut(&C, &Dataset) -> Result<P>,
{
    if candidates.is_empty() {
        return Err(Error::config("cross-validation needs at least one candidate"));
    }
    if candidates.len() == 1 {
        return Ok(CvOutcome {
            best: 0,
            scores: vec![f64::NAN],
        });
    }
    let held_out = kfold(train.len(), folds, &mut labeled_rng(seed, "cv"))?;
    let splits: Vec<(Vec<usize>, &Vec<usize>)> = held_out
        .iter()
        .map(|test| {
            let fit_idx = (0..train.len()).filter(|i| test.binary_search(i).is_err()).collect();
            (fit_idx, test)
        })
        .collect();
    let mut scores = Vec::with_capacity(candidates.len());
    for c in candidates {
        let mut acc = 0.0;
        for (fit_idx, test) in &splits {
            let model = fit(c, &train.subset(fit_idx))?;
            acc += evaluate_model(&model, &train.subset(test), grid_size)?.rmise;
        }
        scores.push(acc / splits.len() as f64);
    }
    let best = (0..candidates.len())
        .min_by(|&a, &b| {
            scores[a]
                .total_cmp(&scores[b])
                .then(candidates[a].parameter_count().cmp(&candidates[b].parameter_count()))
                .then(candidates[a].recon_scale().total_cmp(&candidates[b].recon_scale()))
                .then(a.cmp(&b))
        })
        .expect("nonempty");
    Ok(CvOutcome { best, scores })
}
