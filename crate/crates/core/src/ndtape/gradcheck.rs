//! Central finite-difference gradient checking.
//!
//! The check only evaluates forward values, so it is independent of the
//! backward rules it verifies.

use super::{Tape, Tensor, Var};
use crate::Result;

/// Outcome of a gradient check over every input entry.
#[derive(Debug, Clone, Copy)]
pub struct GradCheck {
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|, floor)`.
    pub max_rel_error: f64,
    /// Number of entries compared.
    pub entries: usize,
}

/// Denominator floor used when gradients are tiny.
pub const REL_FLOOR: f64 = 1e-3;

/// Compare recorded gradients of `f` against central differences with step `h`.
///
/// `f` receives a fresh tape and the inputs registered as trainable leaves and
/// must return a scalar.
pub fn check<F>(inputs: &[Tensor], h: f64, f: F) -> Result<GradCheck>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars = inputs.iter().map(|t| tape.param(t.clone())).collect::<Result<Vec<_>>>()?;
    let loss = f(&mut tape, &vars)?;
    let grads = tape.backward(loss)?;
    let analytic: Vec<Tensor> = vars
        .iter()
        .zip(inputs)
        .map(|(v, t)| grads.get(*v).cloned().unwrap_or_else(|| Tensor::zeros(t.rows(), t.cols())))
        .collect();

    let eval = |xs: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars = xs.iter().map(|t| tape.param(t.clone())).collect::<Result<Vec<_>>>()?;
        let loss = f(&mut tape, &vars)?;
        tape.value(loss).item()
    };

    let mut worst: f64 = 0.0;
    let mut entries = 0;
    let mut work: Vec<Tensor> = inputs.to_vec();
    for (i, input) in inputs.iter().enumerate() {
        for k in 0..input.len() {
            let x0 = input.data()[k];
            work[i].data_mut()[k] = x0 + h;
            let fp = eval(&work)?;
            work[i].data_mut()[k] = x0 - h;
            let fm = eval(&work)?;
            work[i].data_mut()[k] = x0;
            let numeric = (fp - fm) / (2.0 * h);
            let a = analytic[i].data()[k];
            let denom = a.abs().max(numeric.abs()).max(REL_FLOOR);
            worst = worst.max((a - numeric).abs() / denom);
            entries += 1;
        }
    }
    Ok(GradCheck { max_rel_error: worst, entries })
}
