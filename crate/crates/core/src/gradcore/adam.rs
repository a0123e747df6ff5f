use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

use super::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment buffers, one pair per parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState<T> {
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn for_params(params: &[Tensor<T>]) -> Self {
        Self {
            step: 0,
            m: params.iter().map(|p| vec![T::zero(); p.len()]).collect(),
            v: params.iter().map(|p| vec![T::zero(); p.len()]).collect(),
        }
    }
}

/// One bias-corrected Adam update using each tensor's accumulated gradient.
/// Tensors without a gradient buffer are left untouched.
pub fn adam_step<T: Scalar>(
    params: &mut [Tensor<T>],
    state: &mut AdamState<T>,
    cfg: &AdamConfig,
) -> Result<()> {
    if state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(Error::Dimension {
            op: "adam_step",
            left: vec![params.len()],
            right: vec![state.m.len(), state.v.len()],
        });
    }
    state.step += 1;
    let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
    let one = T::one();
    let bc1 = one - T::of(cfg.beta1.powi(state.step as i32));
    let bc2 = one - T::of(cfg.beta2.powi(state.step as i32));
    let (lr, eps) = (T::of(cfg.lr), T::of(cfg.eps));

    for ((p, m), v) in params.iter_mut().zip(&mut state.m).zip(&mut state.v) {
        let shape = p.shape().to_vec();
        let (values, grad) = p.values_and_grad_mut();
        let Some(grad) = grad else { continue };
        if m.len() != values.len() || v.len() != values.len() {
            return Err(Error::Dimension {
                op: "adam_step",
                left: shape,
                right: vec![m.len()],
            });
        }
        for i in 0..values.len() {
            let g = grad[i];
            m[i] = b1 * m[i] + (one - b1) * g;
            v[i] = b2 * v[i] + (one - b2) * g * g;
            let mhat = m[i] / bc1;
            let vhat = v[i] / bc2;
            values[i] -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
    Ok(())
}
