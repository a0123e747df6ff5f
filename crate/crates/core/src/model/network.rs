//! The ContiVAE encoder/decoder stack and its training objective.
//!
//! Each Gaussian conditional is a pair of networks sharing an ELU trunk:
//! `f1` holds the trunk and mean head, `f2` the scale head on the same
//! trunk, and so on for `f3/f4`, `f5/f6`, `g1/g2`, `g3/g4`, `g5/g6`. The
//! encoder pairs are chained: the `g1` trunk output `h_x` is concatenated
//! with `t` for `q(y|t,x)` and with `(t, y)` for `q(z|x,t,y)`.

use rand::Rng;

use crate::datagen::{Matrix, Observations, XLikelihood};
use crate::distributions::{
    normal_kl_on_tape, standard_normal, tilted_kl_on_tape, GaussianVars, TiltedGaussianPrior,
};
use crate::error::{Error, Result};
use crate::gradcore::{AdamState, Tape, Tensor, Var};
use crate::rng::labeled_rng;
use crate::Scalar;

use super::config::{ContiVaeConfig, PriorKind};
use super::layers::{constant, positive, Dense, ParamStore, Trunk};

/// Trunk plus mean and scale heads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct GaussianHeads {
    trunk: Trunk,
    mean: Dense,
    std: Dense,
}

impl GaussianHeads {
    fn init<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        (mean_name, std_name): (&str, &str),
        input: usize,
        hidden: usize,
        depth: usize,
        out: usize,
        rng: &mut R,
    ) -> Self {
        let trunk = Trunk::init(store, mean_name, input, hidden, depth, rng);
        let mean = Dense::init(store, mean_name, depth, hidden, out, rng);
        let std = Dense::init(store, std_name, 0, hidden, out, rng);
        Self { trunk, mean, std }
    }

    fn param_count(input: usize, hidden: usize, depth: usize, out: usize) -> usize {
        Trunk::param_count(input, hidden, depth) + 2 * Dense::param_count(hidden, out)
    }

    fn forward<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        vars: &[Var],
        x: Var,
    ) -> Result<(Var, GaussianVars)> {
        let h = self.trunk.forward(tape, vars, x)?;
        let mean = self.mean.forward(tape, vars, h)?;
        let raw = self.std.forward(tape, vars, h)?;
        let std = positive(tape, raw);
        Ok((h, GaussianVars { mean, std }))
    }

    fn forward_mean<T: Scalar>(&self, tape: &mut Tape<T>, vars: &[Var], x: Var) -> Result<Var> {
        let h = self.trunk.forward(tape, vars, x)?;
        self.mean.forward(tape, vars, h)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Layout {
    px: GaussianHeads,
    pt: GaussianHeads,
    py: GaussianHeads,
    qt: GaussianHeads,
    qy: GaussianHeads,
    qz: GaussianHeads,
}

/// Number of trainable scalars for the given shape; independent of the
/// prior, the likelihood and every optimisation setting.
pub fn parameter_count(d_x: usize, d_z: usize, hidden: usize, layers: usize) -> usize {
    let c = |input, out| GaussianHeads::param_count(input, hidden, layers, out);
    c(d_z, d_x) + c(d_z, 1) + c(d_z + 1, 1) + c(d_x, 1) + c(hidden + 1, 1) + c(hidden + 2, d_z)
}

/// Per-component loss values, each the batch sum of a negative
/// log-density (or the KL term).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub recon_x: f64,
    pub recon_t: f64,
    pub recon_y: f64,
    pub aux_t: f64,
    pub aux_y: f64,
    pub kl: f64,
}

impl LossBreakdown {
    fn components(&self) -> [(&'static str, f64); 7] {
        [
            ("total", self.total),
            ("recon_x", self.recon_x),
            ("recon_t", self.recon_t),
            ("recon_y", self.recon_y),
            ("aux_t", self.aux_t),
            ("aux_y", self.aux_y),
            ("kl", self.kl),
        ]
    }
}

/// Distribution parameters returned by [`ContiVaeModel::encode`]; `y` is
/// on the data scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    pub t_mean: Vec<f64>,
    pub t_std: Vec<f64>,
    pub y_mean: Vec<f64>,
    pub y_std: Vec<f64>,
    pub z_mean: Matrix,
    pub z_std: Matrix,
}

/// Distribution parameters returned by [`ContiVaeModel::decode`]. For a
/// Bernoulli covariate likelihood `x_mean` holds probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoding {
    pub x_mean: Matrix,
    pub x_std: Matrix,
    pub t_mean: Vec<f64>,
    pub t_std: Vec<f64>,
    pub y_mean: Vec<f64>,
    pub y_std: Vec<f64>,
}

struct EncoderVars {
    qt: GaussianVars,
    qy: GaussianVars,
    qz: GaussianVars,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContiVaeModel<T> {
    config: ContiVaeConfig,
    params: ParamStore<T>,
    layout: Layout,
    prior: Option<TiltedGaussianPrior>,
    pub(crate) adam: AdamState<T>,
    /// `(shift, scale)` mapping data-scale outcomes to the standardized
    /// scale the networks see.
    pub(crate) output_scaling: Option<(f64, f64)>,
}

impl<T: Scalar> ContiVaeModel<T> {
    /// Glorot-uniform weights, zero biases, drawn from the config seed.
    pub fn new(config: ContiVaeConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = labeled_rng(config.seed, "init");
        let (d_x, d_z, h, l) = (
            config.covariate_dim,
            config.latent_dim,
            config.hidden_units,
            config.hidden_layers,
        );
        let mut p = ParamStore::new();
        let layout = Layout {
            px: GaussianHeads::init(&mut p, ("f1", "f2"), d_z, h, l, d_x, &mut rng),
            pt: GaussianHeads::init(&mut p, ("f3", "f4"), d_z, h, l, 1, &mut rng),
            py: GaussianHeads::init(&mut p, ("f5", "f6"), d_z + 1, h, l, 1, &mut rng),
            qt: GaussianHeads::init(&mut p, ("g1", "g2"), d_x, h, l, 1, &mut rng),
            qy: GaussianHeads::init(&mut p, ("g3", "g4"), h + 1, h, l, 1, &mut rng),
            qz: GaussianHeads::init(&mut p, ("g5", "g6"), h + 2, h, l, d_z, &mut rng),
        };
        let prior = match config.prior {
            PriorKind::Tilted => Some(TiltedGaussianPrior::new(config.tau, d_z)?),
            PriorKind::Normal => None,
        };
        let adam = AdamState::for_params(p.tensors());
        Ok(Self {
            config,
            params: p,
            layout,
            prior,
            adam,
            output_scaling: None,
        })
    }

    pub fn config(&self) -> &ContiVaeConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    pub fn prior(&self) -> Option<&TiltedGaussianPrior> {
        self.prior.as_ref()
    }

    pub fn parameter_count(&self) -> usize {
        self.params.count()
    }

    /// `(shift, scale)` of the outcome standardization; identity until
    /// fitted by training.
    pub fn output_scaling(&self) -> (f64, f64) {
        self.output_scaling.unwrap_or((0.0, 1.0))
    }

    pub fn set_output_scaling(&mut self, shift: f64, scale: f64) -> Result<()> {
        if !(scale > 0.0 && scale.is_finite() && shift.is_finite()) {
            return Err(Error::contract(format!(
                "output scaling needs finite shift and positive scale, got ({shift}, {scale})"
            )));
        }
        self.output_scaling = Some((shift, scale));
        Ok(())
    }

    pub(crate) fn params_and_adam(&mut self) -> (&mut [Tensor<T>], &mut AdamState<T>) {
        (self.params.tensors_mut(), &mut self.adam)
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.config.covariate_dim {
            return Err(Error::Dimension {
                op: "contivae input",
                left: vec![d],
                right: vec![self.config.covariate_dim],
            });
        }
        Ok(())
    }

    fn encoder(
        &self,
        tape: &mut Tape<T>,
        vars: &[Var],
        x: Var,
        t: Option<Var>,
        y: Option<Var>,
    ) -> Result<EncoderVars> {
        let (h_x, qt) = self.layout.qt.forward(tape, vars, x)?;
        let t_in = t.unwrap_or(qt.mean);
        let in_y = tape.concat(h_x, t_in, 1)?;
        let (_, qy) = self.layout.qy.forward(tape, vars, in_y)?;
        let y_in = y.unwrap_or(qy.mean);
        let in_z = tape.concat(in_y, y_in, 1)?;
        let (_, qz) = self.layout.qz.forward(tape, vars, in_z)?;
        Ok(EncoderVars { qt, qy, qz })
    }

    fn x_log_lik(&self, tape: &mut Tape<T>, px: &GaussianVars, x: Var) -> Result<Var> {
        match self.config.x_likelihood {
            XLikelihood::Gaussian => px.log_prob(tape, x),
            XLikelihood::Bernoulli => {
                // x·a − softplus(a) with `a` the logit from the mean head
                let xa = tape.mul(x, px.mean)?;
                let sp = tape.softplus(px.mean);
                let per = tape.sub(xa, sp)?;
                Ok(tape.sum(per))
            }
        }
    }

    fn standardize(&self, y: f64) -> f64 {
        let (shift, scale) = self.output_scaling();
        (y - shift) / scale
    }

    /// Builds the objective on `tape` for the rows `idx` of `obs` with
    /// reparameterization noise `eps` (`|idx| × d_z`, row-major).
    fn loss_on_tape(
        &self,
        tape: &mut Tape<T>,
        vars: &[Var],
        obs: &Observations,
        idx: &[usize],
        lambda: f64,
        eps: &[f64],
    ) -> Result<(Var, [Var; 6])> {
        let b = idx.len();
        let (d_x, d_z) = (self.config.covariate_dim, self.config.latent_dim);
        if b == 0 {
            return Err(Error::contract("loss needs a nonempty batch"));
        }
        self.check_dim(obs.dim())?;
        if eps.len() != b * d_z {
            return Err(Error::Dimension {
                op: "reparameterization noise",
                left: vec![eps.len()],
                right: vec![b, d_z],
            });
        }
        let x = constant(
            tape,
            b,
            d_x,
            idx.iter().flat_map(|&i| obs.x.row(i).iter().copied()),
        )?;
        let t = constant(tape, b, 1, idx.iter().map(|&i| obs.t[i]))?;
        let y = constant(tape, b, 1, idx.iter().map(|&i| self.standardize(obs.y[i])))?;
        let noise = constant(tape, b, d_z, eps.iter().copied())?;

        let enc = self.encoder(tape, vars, x, Some(t), Some(y))?;
        let z = enc.qz.reparam(tape, noise)?;

        let (_, px) = self.layout.px.forward(tape, vars, z)?;
        let (_, pt) = self.layout.pt.forward(tape, vars, z)?;
        let tz = tape.concat(t, z, 1)?;
        let (_, py) = self.layout.py.forward(tape, vars, tz)?;

        let lx = self.x_log_lik(tape, &px, x)?;
        let lt = pt.log_prob(tape, t)?;
        let ly = py.log_prob(tape, y)?;
        let at = enc.qt.log_prob(tape, t)?;
        let ay = enc.qy.log_prob(tape, y)?;
        let kl = match &self.prior {
            Some(prior) => tilted_kl_on_tape(tape, enc.qz.mean, prior)?,
            None => normal_kl_on_tape(tape, &enc.qz)?,
        };

        let rx = tape.neg(lx);
        let rt = tape.neg(lt);
        let ry = tape.neg(ly);
        let nat = tape.neg(at);
        let nay = tape.neg(ay);
        let mut total = tape.scale(rx, T::of(lambda));
        for v in [rt, ry, nat, nay, kl] {
            total = tape.add(total, v)?;
        }
        Ok((total, [rx, rt, ry, nat, nay, kl]))
    }

    fn breakdown(tape: &Tape<T>, total: Var, parts: [Var; 6]) -> Result<LossBreakdown> {
        let v = |var| tape.scalar(var).as_f64();
        let out = LossBreakdown {
            total: v(total),
            recon_x: v(parts[0]),
            recon_t: v(parts[1]),
            recon_y: v(parts[2]),
            aux_t: v(parts[3]),
            aux_y: v(parts[4]),
            kl: v(parts[5]),
        };
        for (name, value) in out.components() {
            if !value.is_finite() {
                return Err(Error::Numeric {
                    component: name.to_string(),
                    context: String::new(),
                });
            }
        }
        Ok(out)
    }

    /// Objective value with explicit noise and λ, without touching gradients.
    pub fn loss_with_noise(
        &self,
        obs: &Observations,
        idx: &[usize],
        lambda: f64,
        eps: &[f64],
    ) -> Result<LossBreakdown> {
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        let (total, parts) = self.loss_on_tape(&mut tape, &vars, obs, idx, lambda, eps)?;
        Self::breakdown(&tape, total, parts)
    }

    /// Objective value with fresh noise from `rng`.
    pub fn loss<R: Rng + ?Sized>(
        &self,
        obs: &Observations,
        idx: &[usize],
        lambda: f64,
        rng: &mut R,
    ) -> Result<LossBreakdown> {
        let eps = self.draw_noise(idx.len(), rng);
        self.loss_with_noise(obs, idx, lambda, &eps)
    }

    pub(crate) fn draw_noise<R: Rng + ?Sized>(&self, rows: usize, rng: &mut R) -> Vec<f64> {
        (0..rows * self.config.latent_dim)
            .map(|_| standard_normal::<f64, _>(rng))
            .collect()
    }

    /// Replaces every parameter gradient with the gradient of the objective.
    pub fn compute_gradients(
        &mut self,
        obs: &Observations,
        idx: &[usize],
        lambda: f64,
        eps: &[f64],
    ) -> Result<LossBreakdown> {
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        let (total, parts) = self.loss_on_tape(&mut tape, &vars, obs, idx, lambda, eps)?;
        let out = Self::breakdown(&tape, total, parts)?;
        let grads = tape.backward(total)?;
        self.params.zero_grad();
        self.params.accumulate(&grads, &vars)?;
        Ok(out)
    }

    fn x_constant(&self, tape: &mut Tape<T>, x: &Matrix) -> Result<Var> {
        self.check_dim(x.cols())?;
        constant(tape, x.rows(), x.cols(), x.data().iter().copied())
    }

    /// Encoder distributions for each row of `x`. Missing `t`/`y` are
    /// replaced by the predicted means, as at inference time.
    pub fn encode(&self, x: &Matrix, t: Option<&[f64]>, y: Option<&[f64]>) -> Result<Encoding> {
        let n = x.rows();
        for v in [t, y].into_iter().flatten() {
            if v.len() != n {
                return Err(Error::contract(format!(
                    "encode: {} rows of x but {} conditioning values",
                    n,
                    v.len()
                )));
            }
        }
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        let xv = self.x_constant(&mut tape, x)?;
        let tv = t
            .map(|t| constant(&mut tape, n, 1, t.iter().copied()))
            .transpose()?;
        let yv = y
            .map(|y| constant(&mut tape, n, 1, y.iter().map(|&v| self.standardize(v))))
            .transpose()?;
        let enc = self.encoder(&mut tape, &vars, xv, tv, yv)?;
        let (shift, scale) = self.output_scaling();
        let col = |v: Var| -> Vec<f64> { tape.value(v).iter().map(|a| a.as_f64()).collect() };
        let d_z = self.config.latent_dim;
        Ok(Encoding {
            t_mean: col(enc.qt.mean),
            t_std: col(enc.qt.std),
            y_mean: col(enc.qy.mean).iter().map(|v| v * scale + shift).collect(),
            y_std: col(enc.qy.std).iter().map(|v| v * scale).collect(),
            z_mean: Matrix::new(n, d_z, col(enc.qz.mean))?,
            z_std: Matrix::new(n, d_z, col(enc.qz.std))?,
        })
    }

    /// Decoder distributions at latent rows `z` and doses `t`.
    pub fn decode(&self, z: &Matrix, t: &[f64]) -> Result<Decoding> {
        let (n, d_z) = (z.rows(), self.config.latent_dim);
        if z.cols() != d_z || t.len() != n {
            return Err(Error::Dimension {
                op: "decode",
                left: vec![n, z.cols()],
                right: vec![t.len(), d_z],
            });
        }
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        let zv = constant(&mut tape, n, d_z, z.data().iter().copied())?;
        let tv = constant(&mut tape, n, 1, t.iter().copied())?;
        let (_, px) = self.layout.px.forward(&mut tape, &vars, zv)?;
        let (_, pt) = self.layout.pt.forward(&mut tape, &vars, zv)?;
        let tz = tape.concat(tv, zv, 1)?;
        let (_, py) = self.layout.py.forward(&mut tape, &vars, tz)?;
        let col = |v: Var| -> Vec<f64> { tape.value(v).iter().map(|a| a.as_f64()).collect() };
        let d_x = self.config.covariate_dim;
        let (x_mean, x_std) = match self.config.x_likelihood {
            XLikelihood::Gaussian => (col(px.mean), col(px.std)),
            XLikelihood::Bernoulli => {
                let p: Vec<f64> = col(px.mean).iter().map(|a| 1.0 / (1.0 + (-a).exp())).collect();
                let s = p.iter().map(|p| (p * (1.0 - p)).sqrt()).collect();
                (p, s)
            }
        };
        let (shift, scale) = self.output_scaling();
        Ok(Decoding {
            x_mean: Matrix::new(n, d_x, x_mean)?,
            x_std: Matrix::new(n, d_x, x_std)?,
            t_mean: col(pt.mean),
            t_std: col(pt.std),
            y_mean: col(py.mean).iter().map(|v| v * scale + shift).collect(),
            y_std: col(py.std).iter().map(|v| v * scale).collect(),
        })
    }

    /// Outcome means `μy(t, z)` for every `(t, z)` pair on the data scale,
    /// grouped by dose: entry `g·|z| + ℓ`.
    pub(crate) fn outcome_means(&self, z: &[f64], n_z: usize, grid: &[f64]) -> Result<Vec<f64>> {
        let d_z = self.config.latent_dim;
        let rows = grid.len() * n_z;
        let mut data = Vec::with_capacity(rows * (d_z + 1));
        for &t in grid {
            for l in 0..n_z {
                data.push(t);
                data.extend_from_slice(&z[l * d_z..(l + 1) * d_z]);
            }
        }
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        let tz = constant(&mut tape, rows, d_z + 1, data)?;
        let mu = self.layout.py.forward_mean(&mut tape, &vars, tz)?;
        let (shift, scale) = self.output_scaling();
        Ok(tape
            .value(mu)
            .iter()
            .map(|v| v.as_f64() * scale + shift)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn small(prior: PriorKind) -> ContiVaeConfig {
        ContiVaeConfig {
            covariate_dim: 10,
            latent_dim: 4,
            hidden_units: 8,
            hidden_layers: 2,
            prior,
            seed: 3,
            ..Default::default()
        }
    }

    fn random_obs(n: usize, d: usize, seed: u64) -> Observations {
        let mut rng = rng_from_seed(seed);
        let x: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
        let t = (0..n).map(|_| rng.random::<f64>()).collect();
        let y = (0..n).map(|_| rng.random::<f64>() * 3.0).collect();
        Observations::new(Matrix::new(n, d, x).unwrap(), t, y).unwrap()
    }

    #[test]
    fn parameter_count_matches_layer_shapes() {
        // trunk(n) = 8n + 8 + 72; heads add 2·(8·out + out)
        let m = ContiVaeModel::<f64>::new(small(PriorKind::Tilted)).unwrap();
        assert_eq!(m.parameter_count(), 1140);
        assert_eq!(parameter_count(10, 4, 8, 2), 1140);
    }

    #[test]
    fn same_seed_same_parameters() {
        let a = ContiVaeModel::<f64>::new(small(PriorKind::Tilted)).unwrap();
        let b = ContiVaeModel::<f64>::new(small(PriorKind::Tilted)).unwrap();
        assert_eq!(a.params().to_named(), b.params().to_named());
        let c = ContiVaeModel::<f64>::new(ContiVaeConfig {
            seed: 4,
            ..small(PriorKind::Tilted)
        })
        .unwrap();
        assert_ne!(a.params().to_named(), c.params().to_named());
    }

    #[test]
    fn scale_heads_positive_and_encoder_responds_to_x() {
        let m = ContiVaeModel::<f64>::new(small(PriorKind::Tilted)).unwrap();
        let obs = random_obs(5, 10, 1);
        let enc = m.encode(&obs.x, None, None).unwrap();
        assert!(enc.z_std.data().iter().all(|&s| s > 0.0 && s.is_finite()));
        assert!(enc.t_std.iter().chain(&enc.y_std).all(|&s| s > 0.0));
        let again = m.encode(&obs.x, None, None).unwrap();
        assert_eq!(enc, again);

        let mut x2 = obs.x.clone();
        x2.set(0, 0, x2.get(0, 0) + 0.5);
        let moved = m.encode(&x2, None, None).unwrap();
        assert_ne!(enc.z_mean.row(0), moved.z_mean.row(0));
        assert_eq!(enc.z_mean.row(1), moved.z_mean.row(1));
    }

    #[test]
    fn only_outcome_head_depends_on_dose() {
        let m = ContiVaeModel::<f64>::new(small(PriorKind::Tilted)).unwrap();
        let mut rng = rng_from_seed(5);
        let z = Matrix::new(1, 4, (0..4).map(|_| standard_normal(&mut rng)).collect()).unwrap();
        let d0 = m.decode(&z, &[0.0]).unwrap();
        let d1 = m.decode(&z, &[1.0]).unwrap();
        assert_ne!(d0.y_mean, d1.y_mean);
        assert_eq!(d0.x_mean, d1.x_mean);
        assert_eq!(d0.t_mean, d1.t_mean);
        assert!(d0.x_std.data().iter().all(|&s| s > 0.0));
    }

    #[test]
    fn lambda_scales_only_the_covariate_term() {
        let m = ContiVaeModel::<f64>::new(small(PriorKind::Tilted)).unwrap();
        let obs = random_obs(6, 10, 2);
        let idx: Vec<usize> = (0..6).collect();
        let eps = m.draw_noise(6, &mut rng_from_seed(8));
        let a = m.loss_with_noise(&obs, &idx, 1.0, &eps).unwrap();
        let b = m.loss_with_noise(&obs, &idx, 0.1, &eps).unwrap();
        assert!((a.total - b.total - 0.9 * a.recon_x).abs() < 1e-9 * a.total.abs().max(1.0));
        let sum = a.recon_x + a.recon_t + a.recon_y + a.aux_t + a.aux_y + a.kl;
        assert!((a.total - sum).abs() < 1e-9);
    }

    #[test]
    fn zero_lambda_gives_no_gradient_to_covariate_decoder() {
        let mut m = ContiVaeModel::<f64>::new(small(PriorKind::Normal)).unwrap();
        let obs = random_obs(4, 10, 3);
        let eps = m.draw_noise(4, &mut rng_from_seed(1));
        m.compute_gradients(&obs, &[0, 1, 2, 3], 0.0, &eps).unwrap();
        let p = m.params();
        for (name, t) in p.names().iter().zip(p.tensors()) {
            let g = t.grad().unwrap();
            let zero = g.iter().all(|&v| v == 0.0);
            if name.starts_with("f1.") || name.starts_with("f2.") {
                assert!(zero, "{name} received gradient");
            } else if name.ends_with(".W0") {
                assert!(!zero, "{name} received no gradient");
            }
        }
    }

    #[test]
    fn normal_prior_kl_vanishes_at_standard_posterior() {
        let mut tape = Tape::<f64>::new();
        let mean = tape.constant(vec![2, 3], vec![0.0; 6]).unwrap();
        let std = tape.constant(vec![2, 3], vec![1.0; 6]).unwrap();
        let kl = normal_kl_on_tape(&mut tape, &GaussianVars { mean, std }).unwrap();
        assert_eq!(tape.scalar(kl), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = ContiVaeModel::<f64>::new(small(PriorKind::Tilted)).unwrap();
        let obs = random_obs(2, 7, 1);
        assert!(matches!(
            m.encode(&obs.x, None, None),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn single_precision_builds_and_runs() {
        let m = ContiVaeModel::<f32>::new(small(PriorKind::Tilted)).unwrap();
        let obs = random_obs(3, 10, 4);
        let l = m.loss(&obs, &[0, 1, 2], 1.0, &mut rng_from_seed(0)).unwrap();
        assert!(l.total.is_finite());
    }
}
