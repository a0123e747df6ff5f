use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// Dense tensor with row-major values and an optional gradient buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    values: Vec<T>,
    requires_grad: bool,
    #[serde(skip)]
    grad: Option<Vec<T>>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, values: Vec<T>) -> Result<Self> {
        if shape.contains(&0) && !values.is_empty() {
            return Err(Error::contract(format!("shape {shape:?} has a zero axis")));
        }
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(Error::Dimension {
                op: "tensor",
                left: shape,
                right: vec![values.len()],
            });
        }
        Ok(Self {
            shape,
            values,
            requires_grad: false,
            grad: None,
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            values: vec![T::zero(); n],
            requires_grad: false,
            grad: None,
        }
    }

    pub fn scalar(v: T) -> Self {
        Self {
            shape: vec![1],
            values: vec![v],
            requires_grad: false,
            grad: None,
        }
    }

    pub fn vector(values: Vec<T>) -> Self {
        Self {
            shape: vec![values.len()],
            values,
            requires_grad: false,
            grad: None,
        }
    }

    pub fn matrix(rows: usize, cols: usize, values: Vec<T>) -> Result<Self> {
        Self::new(vec![rows, cols], values)
    }

    /// Marks the tensor as a trainable parameter and allocates a zeroed
    /// gradient buffer.
    pub fn with_grad(mut self) -> Self {
        self.requires_grad = true;
        self.grad = Some(vec![T::zero(); self.values.len()]);
        self
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn grad(&self) -> Option<&[T]> {
        self.grad.as_deref()
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_mut() {
            g.iter_mut().for_each(|v| *v = T::zero());
        }
    }

    /// Adds `delta` into the gradient buffer. No-op for constants.
    pub fn accumulate_grad(&mut self, delta: &[T]) -> Result<()> {
        let Some(g) = self.grad.as_mut() else {
            return Ok(());
        };
        if g.len() != delta.len() {
            return Err(Error::Dimension {
                op: "accumulate_grad",
                left: self.shape.clone(),
                right: vec![delta.len()],
            });
        }
        for (a, &d) in g.iter_mut().zip(delta) {
            *a += d;
        }
        Ok(())
    }

    /// Splits into the parts needed by an optimizer step.
    pub(crate) fn values_and_grad_mut(&mut self) -> (&mut [T], Option<&[T]>) {
        (&mut self.values, self.grad.as_deref())
    }

    /// Converts the element type, keeping the gradient flag.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        let values = self.values.iter().map(|v| U::of(v.as_f64())).collect();
        let t = Tensor {
            shape: self.shape.clone(),
            values,
            requires_grad: false,
            grad: None,
        };
        if self.requires_grad {
            t.with_grad()
        } else {
            t
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_must_match_value_count() {
        assert!(Tensor::<f64>::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(matches!(
            Tensor::<f64>::new(vec![2, 3], vec![0.0; 5]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn zero_grad_clears_buffer() {
        let mut t = Tensor::<f64>::vector(vec![1.0, 2.0]).with_grad();
        t.accumulate_grad(&[0.5, -1.0]).unwrap();
        t.accumulate_grad(&[0.5, 0.0]).unwrap();
        assert_eq!(t.grad().unwrap(), &[1.0, -1.0]);
        t.zero_grad();
        assert!(t.grad().unwrap().iter().all(|&g| g == 0.0));
        assert_eq!(t.grad().unwrap().len(), t.len());
    }

    #[test]
    fn constants_ignore_gradients() {
        let mut t = Tensor::<f64>::scalar(3.0);
        t.accumulate_grad(&[1.0]).unwrap();
        assert!(t.grad().is_none());
    }
}
