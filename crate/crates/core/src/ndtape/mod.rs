//! Dense and sparse `f64` kernels with recorded-operation reverse-mode
//! differentiation.
//!
//! A [`Tape`] is built fresh for every forward pass. Operations append nodes
//! and return [`Var`] handles; [`Tape::backward`] consumes the tape and
//! returns the gradient of every node that requires one. Every operation
//! checks that its output is finite and fails with
//! [`Error::Numeric`](crate::Error::Numeric) otherwise.
//!
//! Only one broadcast form exists: a `1 x C` right operand applied across
//! the rows of an `N x C` left operand (`add`, `sub`, `hadamard`).

mod sparse;
mod tape;
mod tensor;

pub mod gradcheck;

pub use sparse::SparseMatrix;
pub use tape::{Gradients, Tape, Var, LOG_EPS};
pub use tensor::Tensor;

pub(crate) use tape::softmax_in_place;

/// Row softmax of `z / temperature` on plain values.
pub fn softmax(z: &Tensor, temperature: f64) -> crate::Result<Tensor> {
    if !(temperature > 0.0) {
        return Err(crate::error::param_err!("softmax temperature must be positive, got {}", temperature));
    }
    let mut out = z.clone();
    for r in 0..out.rows() {
        softmax_in_place(out.row_mut(r), temperature);
    }
    Ok(out)
}
