//! Reverse-mode automatic differentiation over dense row-major tensors.
//!
//! Forward operations are recorded on a [`Tape`]; [`Tape::backward`]
//! consumes the tape and replays it in reverse to produce [`Gradients`].
//! Parameters live in [`Tensor`]s outside the tape and receive their
//! adjoints through [`Gradients::accumulate_into`].

mod adam;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use tape::{BinaryOp, Gradients, Tape, UnaryOp, Var};
pub use tensor::Tensor;
