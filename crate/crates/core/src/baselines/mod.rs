//! Plain MLP regressor on `x ⧺ t`, trained by mean squared error.

use serde::{Deserialize, Serialize};

use crate::datagen::{Matrix, Observations};
use crate::error::{Error, Result};
use crate::gradcore::{adam_step, AdamConfig, AdamState, Tape, Var};
use crate::model::layers::{constant, Dense, ParamStore, Trunk};
use crate::model::{
    check_grid, config_hash, epoch_batches, precision_name, standardization, Checkpoint,
    OptimizerSnapshot, CHECKPOINT_VERSION,
};
use crate::rng::labeled_rng;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpBaselineConfig {
    pub covariate_dim: usize,
    pub hidden_units: usize,
    pub hidden_layers: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpBaselineConfig {
    fn default() -> Self {
        Self {
            covariate_dim: 1,
            hidden_units: 128,
            hidden_layers: 2,
            learning_rate: 1e-4,
            epochs: 100,
            batch_size: 64,
            seed: 0,
        }
    }
}

impl MlpBaselineConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("covariate_dim", self.covariate_dim),
            ("hidden_units", self.hidden_units),
            ("hidden_layers", self.hidden_layers),
            ("batch_size", self.batch_size),
        ] {
            if v == 0 {
                return Err(Error::config(format!("{name} must be at least 1")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate must be positive"));
        }
        Ok(())
    }
}

pub const MLP_KIND: &str = "mlp";

#[derive(Debug, Clone, PartialEq)]
pub struct MlpBaseline<T> {
    config: MlpBaselineConfig,
    params: ParamStore<T>,
    trunk: Trunk,
    head: Dense,
    adam: AdamState<T>,
    output_scaling: Option<(f64, f64)>,
}

impl<T: Scalar> MlpBaseline<T> {
    pub fn new(config: MlpBaselineConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = labeled_rng(config.seed, "init");
        let (d, h, l) = (config.covariate_dim + 1, config.hidden_units, config.hidden_layers);
        let mut params = ParamStore::new();
        let trunk = Trunk::init(&mut params, "m", d, h, l, &mut rng);
        let head = Dense::init(&mut params, "m", l, h, 1, &mut rng);
        let adam = AdamState::for_params(params.tensors());
        Ok(Self {
            config,
            params,
            trunk,
            head,
            adam,
            output_scaling: None,
        })
    }

    pub fn config(&self) -> &MlpBaselineConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.count()
    }

    pub fn output_scaling(&self) -> (f64, f64) {
        self.output_scaling.unwrap_or((0.0, 1.0))
    }

    /// Sets every weight and bias to zero.
    pub fn zero_params(&mut self) {
        for t in self.params.tensors_mut() {
            t.values_mut().iter_mut().for_each(|v| *v = T::zero());
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.config.covariate_dim {
            return Err(Error::Dimension {
                op: "mlp input",
                left: vec![d],
                right: vec![self.config.covariate_dim],
            });
        }
        Ok(())
    }

    fn forward(&self, tape: &mut Tape<T>, vars: &[Var], xt: Var) -> Result<Var> {
        let h = self.trunk.forward(tape, vars, xt)?;
        self.head.forward(tape, vars, h)
    }

    /// Batch mean squared error on the standardized outcome scale, with
    /// gradients written into the parameters.
    pub fn compute_gradients(&mut self, obs: &Observations, idx: &[usize]) -> Result<f64> {
        if idx.is_empty() {
            return Err(Error::contract("loss needs a nonempty batch"));
        }
        self.check_dim(obs.dim())?;
        let (shift, scale) = self.output_scaling();
        let d = obs.dim();
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        let xt = constant(
            &mut tape,
            idx.len(),
            d + 1,
            idx.iter()
                .flat_map(|&i| obs.x.row(i).iter().copied().chain([obs.t[i]])),
        )?;
        let y = constant(&mut tape, idx.len(), 1, idx.iter().map(|&i| (obs.y[i] - shift) / scale))?;
        let pred = self.forward(&mut tape, &vars, xt)?;
        let diff = tape.sub(pred, y)?;
        let sq = tape.square(diff);
        let s = tape.sum(sq);
        let mse = tape.scale(s, T::of(1.0 / idx.len() as f64));
        let value = tape.scalar(mse).as_f64();
        if !value.is_finite() {
            return Err(Error::Numeric {
                component: "mse".into(),
                context: String::new(),
            });
        }
        let grads = tape.backward(mse)?;
        self.params.zero_grad();
        self.params.accumulate(&grads, &vars)?;
        Ok(value)
    }

    /// Minibatch Adam; returns the per-epoch mean batch loss.
    pub fn train(&mut self, obs: &Observations) -> Result<Vec<f64>> {
        if obs.is_empty() {
            return Err(Error::contract("cannot train on an empty dataset"));
        }
        self.check_dim(obs.dim())?;
        if self.output_scaling.is_none() {
            self.output_scaling = Some(standardization(&obs.y));
        }
        let cfg = self.config.clone();
        let adam_cfg = AdamConfig::with_lr(cfg.learning_rate);
        let mut shuffle = labeled_rng(cfg.seed, &format!("shuffle/{}", self.adam.step));
        let mut trace = Vec::with_capacity(cfg.epochs);
        for epoch in 0..cfg.epochs {
            let batches = epoch_batches(obs.len(), cfg.batch_size, &mut shuffle);
            let mut acc = 0.0;
            for (bi, batch) in batches.iter().enumerate() {
                let l = self
                    .compute_gradients(obs, batch)
                    .map_err(|e| e.with_context(format!("epoch {}, batch {bi}", epoch + 1)))?;
                adam_step(self.params.tensors_mut(), &mut self.adam, &adam_cfg)?;
                acc += l;
            }
            trace.push(acc / batches.len() as f64);
        }
        Ok(trace)
    }

    /// Direct forward pass at every grid dose for row `i` of `x`.
    pub fn predict_curve(&self, x: &Matrix, i: usize, grid: &[f64]) -> Result<Vec<f64>> {
        check_grid(grid)?;
        self.check_dim(x.cols())?;
        let row = x.row(i);
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        let xt = constant(
            &mut tape,
            grid.len(),
            row.len() + 1,
            grid.iter().flat_map(|&t| row.iter().copied().chain([t])),
        )?;
        let pred = self.forward(&mut tape, &vars, xt)?;
        let (shift, scale) = self.output_scaling();
        Ok(tape
            .value(pred)
            .iter()
            .map(|v| v.as_f64() * scale + shift)
            .collect())
    }

    pub fn predict_curves(&self, x: &Matrix, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
        (0..x.rows()).map(|i| self.predict_curve(x, i, grid)).collect()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            kind: MLP_KIND.to_string(),
            precision: precision_name::<T>().to_string(),
            config_hash: config_hash(&self.config),
            config: serde_json::to_value(&self.config).expect("config serializes"),
            output_scaling: self.output_scaling,
            params: self.params.to_named(),
            optimizer: OptimizerSnapshot::capture(&self.adam),
        }
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        let cfg: MlpBaselineConfig = c.typed_config(&[MLP_KIND])?;
        let mut m = Self::new(cfg)?;
        m.params.load_named(&c.params)?;
        m.output_scaling = c.output_scaling;
        let adam: AdamState<T> = c.optimizer.restore();
        if adam.m.len() != m.params.len() {
            return Err(Error::contract("optimizer state does not match parameters"));
        }
        m.adam = adam;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::uniform_grid;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn obs(n: usize, d: usize) -> Observations {
        let mut rng = rng_from_seed(11);
        let x: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
        let t: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y = (0..n).map(|i| 5.0 * t[i] + x[i * d]).collect();
        Observations::new(Matrix::new(n, d, x).unwrap(), t, y).unwrap()
    }

    fn cfg(epochs: usize) -> MlpBaselineConfig {
        MlpBaselineConfig {
            covariate_dim: 3,
            hidden_units: 8,
            epochs,
            learning_rate: 1e-2,
            batch_size: 16,
            seed: 2,
            ..Default::default()
        }
    }

    #[test]
    fn zero_epochs_leave_parameters_alone() {
        let mut m = MlpBaseline::<f64>::new(cfg(0)).unwrap();
        let before = m.params().to_named();
        m.train(&obs(20, 3)).unwrap();
        assert_eq!(m.params().to_named(), before);
    }

    #[test]
    fn same_seed_same_trained_parameters() {
        let data = obs(40, 3);
        let mut a = MlpBaseline::<f64>::new(cfg(3)).unwrap();
        let mut b = MlpBaseline::<f64>::new(cfg(3)).unwrap();
        a.train(&data).unwrap();
        b.train(&data).unwrap();
        assert_eq!(a.params().to_named(), b.params().to_named());
    }

    #[test]
    fn zero_weights_give_constant_curve() {
        let mut m = MlpBaseline::<f64>::new(cfg(0)).unwrap();
        m.zero_params();
        let x = Matrix::new(1, 3, vec![0.3, 0.1, 0.9]).unwrap();
        let c = m.predict_curve(&x, 0, &uniform_grid(11)).unwrap();
        assert_eq!(c.len(), 11);
        assert!(c.iter().all(|&v| v == c[0]));
    }

    #[test]
    fn training_reduces_error() {
        let data = obs(200, 3);
        let mut m = MlpBaseline::<f64>::new(cfg(40)).unwrap();
        let trace = m.train(&data).unwrap();
        assert!(trace[39] < 0.2 * trace[0], "{trace:?}");
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut m = MlpBaseline::<f32>::new(cfg(1)).unwrap();
        m.train(&obs(20, 3)).unwrap();
        let c = m.to_checkpoint();
        assert_eq!(c.precision, "f32");
        let back = MlpBaseline::<f32>::from_checkpoint(&c).unwrap();
        assert_eq!(back.params().to_named(), m.params().to_named());
        assert!(crate::model::ContiVaeModel::<f32>::from_checkpoint(&c).is_err());
    }
}
