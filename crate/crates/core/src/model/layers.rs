//! Named parameter storage and the dense/MLP building blocks shared by
//! ContiVAE and the baseline regressor.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradcore::{Gradients, Tape, Tensor, Var};
use crate::Scalar;

/// Parameter tensors in creation order, each with a stable name such as
/// `f1.W0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<T> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
}

/// Serialized form of one parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl<T: Scalar> Default for ParamStore<T> {
    fn default() -> Self {
        Self {
            names: Vec::new(),
            tensors: Vec::new(),
        }
    }
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor<T>) -> usize {
        self.names.push(name.into());
        self.tensors.push(tensor.with_grad());
        self.tensors.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.tensors[i])
    }

    /// Total number of scalar parameters.
    pub fn count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn zero_grad(&mut self) {
        self.tensors.iter_mut().for_each(Tensor::zero_grad);
    }

    /// Places every parameter on the tape as a differentiable leaf.
    pub fn bind(&self, tape: &mut Tape<T>) -> Vec<Var> {
        self.tensors.iter().map(|t| tape.leaf(t)).collect()
    }

    pub fn accumulate(&mut self, grads: &Gradients<T>, vars: &[Var]) -> Result<()> {
        for (t, &v) in self.tensors.iter_mut().zip(vars) {
            grads.accumulate_into(v, t)?;
        }
        Ok(())
    }

    pub fn to_named(&self) -> Vec<NamedTensor> {
        self.names
            .iter()
            .zip(&self.tensors)
            .map(|(name, t)| NamedTensor {
                name: name.clone(),
                shape: t.shape().to_vec(),
                values: t.values().iter().map(|v| v.as_f64()).collect(),
            })
            .collect()
    }

    /// Overwrites values from a serialized list that must match names and
    /// shapes exactly.
    pub fn load_named(&mut self, named: &[NamedTensor]) -> Result<()> {
        if named.len() != self.len() {
            return Err(Error::contract(format!(
                "checkpoint has {} tensors, model expects {}",
                named.len(),
                self.len()
            )));
        }
        for ((name, t), n) in self.names.iter().zip(&mut self.tensors).zip(named) {
            if &n.name != name || n.shape != t.shape() || n.values.len() != t.len() {
                return Err(Error::contract(format!(
                    "checkpoint tensor {} {:?} does not match {} {:?}",
                    n.name,
                    n.shape,
                    name,
                    t.shape()
                )));
            }
            for (dst, &v) in t.values_mut().iter_mut().zip(&n.values) {
                *dst = T::of(v);
            }
        }
        Ok(())
    }
}

/// Affine layer `x·W + b` with `W` stored `fan_in × fan_out`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub w: usize,
    pub b: usize,
    pub fan_in: usize,
    pub fan_out: usize,
}

/// Glorot-uniform bound `√(6/(fan_in+fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

impl Dense {
    pub fn init<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        prefix: &str,
        index: usize,
        fan_in: usize,
        fan_out: usize,
        rng: &mut R,
    ) -> Self {
        let a = glorot_bound(fan_in, fan_out);
        let w: Vec<T> = (0..fan_in * fan_out)
            .map(|_| T::of(rng.random_range(-a..=a)))
            .collect();
        let w = store.add(
            format!("{prefix}.W{index}"),
            Tensor::new(vec![fan_in, fan_out], w).expect("shape matches"),
        );
        let b = store.add(
            format!("{prefix}.b{index}"),
            Tensor::zeros(vec![1, fan_out]),
        );
        Self {
            w,
            b,
            fan_in,
            fan_out,
        }
    }

    pub fn param_count(fan_in: usize, fan_out: usize) -> usize {
        fan_in * fan_out + fan_out
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, vars: &[Var], x: Var) -> Result<Var> {
        let rows = tape.shape(x)[0];
        let xw = tape.matmul(x, vars[self.w])?;
        let b = tape.repeat_rows(vars[self.b], rows)?;
        tape.add(xw, b)
    }
}

/// Stack of ELU hidden layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trunk {
    pub layers: Vec<Dense>,
}

impl Trunk {
    pub fn init<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        prefix: &str,
        input: usize,
        hidden: usize,
        depth: usize,
        rng: &mut R,
    ) -> Self {
        let layers = (0..depth)
            .map(|i| {
                let fan_in = if i == 0 { input } else { hidden };
                Dense::init(store, prefix, i, fan_in, hidden, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn param_count(input: usize, hidden: usize, depth: usize) -> usize {
        if depth == 0 {
            return 0;
        }
        Dense::param_count(input, hidden) + (depth - 1) * Dense::param_count(hidden, hidden)
    }

    pub fn width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.fan_out)
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, vars: &[Var], x: Var) -> Result<Var> {
        let mut h = x;
        for layer in &self.layers {
            let a = layer.forward(tape, vars, h)?;
            h = tape.elu(a);
        }
        Ok(h)
    }
}

/// Positive output: softplus plus a small floor so log-densities stay
/// finite when a scale head saturates.
pub const SCALE_FLOOR: f64 = 1e-4;

pub fn positive<T: Scalar>(tape: &mut Tape<T>, a: Var) -> Var {
    let s = tape.softplus(a);
    tape.offset(s, T::of(SCALE_FLOOR))
}

/// Row-major `rows × cols` constant from `f64` data.
pub fn constant<T: Scalar>(
    tape: &mut Tape<T>,
    rows: usize,
    cols: usize,
    data: impl IntoIterator<Item = f64>,
) -> Result<Var> {
    let v: Vec<T> = data.into_iter().map(T::of).collect();
    tape.constant(vec![rows, cols], v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn glorot_weights_within_bound_and_zero_bias() {
        let mut store = ParamStore::<f64>::new();
        let mut rng = rng_from_seed(1);
        let d = Dense::init(&mut store, "g1", 0, 30, 10, &mut rng);
        let a = glorot_bound(30, 10);
        let w = store.tensors()[d.w].values();
        assert!(w.iter().all(|v| v.abs() <= a));
        assert!(w.iter().any(|v| v.abs() > 0.5 * a));
        assert!(store.tensors()[d.b].values().iter().all(|&v| v == 0.0));
        assert_eq!(store.names(), ["g1.W0", "g1.b0"]);
    }

    #[test]
    fn named_round_trip() {
        let mut rng = rng_from_seed(2);
        let mut a = ParamStore::<f32>::new();
        Trunk::init(&mut a, "f3", 3, 4, 2, &mut rng);
        let named = a.to_named();
        let mut b = ParamStore::<f32>::new();
        Trunk::init(&mut b, "f3", 3, 4, 2, &mut rng_from_seed(9));
        assert_ne!(a, b);
        b.load_named(&named).unwrap();
        assert_eq!(a.to_named(), b.to_named());
        assert_eq!(a.count(), Trunk::param_count(3, 4, 2));
    }
}
