use std::sync::Arc;

use crate::error::dim_err;
use crate::ndtape::{SparseMatrix, Tape, Tensor, Var};
use crate::rng::SplitMix64;
use crate::Result;

/// Learnable class weighting driven by prediction entropy:
/// `W = softmax(Hᵀ χ φ)` with `H` the per-row negative entropy, optionally
/// smoothed over the graph as `Â H w + b` first.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveWeightUnit {
    /// `N_train x h`.
    pub chi: Tensor,
    /// `h x C`.
    pub phi: Tensor,
    /// `(w, b)`, both `1 x 1`, for the graph-smoothed entropy.
    pub conv: Option<(Tensor, Tensor)>,
}

/// Tape handles of a unit's parameters.
#[derive(Debug, Clone, Copy)]
pub struct UnitVars {
    pub chi: Var,
    pub phi: Var,
    pub conv: Option<(Var, Var)>,
}

impl AdaptiveWeightUnit {
    /// Glorot-uniform `χ`, `φ`; the graph convolution starts as the identity
    /// map (`w = 1`, `b = 0`).
    pub fn init(rows: usize, hidden: usize, classes: usize, graph_aware: bool, seed: u64) -> Result<Self> {
        let mut rng = SplitMix64::new(seed);
        let mut glorot = |r: usize, c: usize| {
            let b = crate::models::glorot_bound(r, c);
            Tensor::matrix(r, c, (0..r * c).map(|_| rng.uniform_range(-b, b)).collect())
        };
        Ok(Self {
            chi: glorot(rows, hidden)?,
            phi: glorot(hidden, classes)?,
            conv: graph_aware.then(|| (Tensor::scalar(1.0), Tensor::scalar(0.0))),
        })
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut v = vec![&self.chi, &self.phi];
        if let Some((w, b)) = &self.conv {
            v.push(w);
            v.push(b);
        }
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = vec![&mut self.chi, &mut self.phi];
        if let Some((w, b)) = &mut self.conv {
            v.push(w);
            v.push(b);
        }
        v
    }

    pub fn register(&self, tape: &mut Tape) -> Result<UnitVars> {
        let chi = tape.param(self.chi.clone())?;
        let phi = tape.param(self.phi.clone())?;
        let conv = match &self.conv {
            Some((w, b)) => Some((tape.param(w.clone())?, tape.param(b.clone())?)),
            None => None,
        };
        Ok(UnitVars { chi, phi, conv })
    }
}

/// Class weights `1 x C` from probabilities.
///
/// Without graph smoothing `probs` holds the training rows only. With it,
/// `probs` holds every node, the smoothed entropy is computed over all nodes
/// with `a_hat`, and `rows` picks the training nodes afterwards.
pub fn adaptive_weights(
    tape: &mut Tape,
    unit: &UnitVars,
    probs: Var,
    graph: Option<(&Arc<SparseMatrix>, &Arc<[usize]>)>,
) -> Result<Var> {
    let mut h = tape.entropy_rows(probs)?;
    match (unit.conv, graph) {
        (Some((w, b)), Some((a_hat, rows))) => {
            let smoothed = tape.spmm(a_hat, h)?;
            let scaled = tape.matmul(smoothed, w)?;
            let shifted = tape.add(scaled, b)?;
            h = tape.select_rows(shifted, rows)?;
        }
        (None, None) => {}
        _ => return Err(dim_err!("graph smoothing needs both conv parameters and a graph")),
    }
    let n = tape.value(h).rows();
    let expect = tape.value(unit.chi).rows();
    if n != expect {
        return Err(crate::Error::Config(format!("weighting unit sized for {} rows, got {}", expect, n)));
    }
    let ht = tape.transpose(h)?;
    let hc = tape.matmul(ht, unit.chi)?;
    let sigma = tape.matmul(hc, unit.phi)?;
    tape.softmax_rows(sigma, 1.0)
}

/// Scale columns of `p` by `w` and renormalize every row.
pub fn apply_weighting(tape: &mut Tape, p: Var, w: Var) -> Result<Var> {
    let scaled = tape.hadamard(p, w)?;
    tape.normalize_rows(scaled)
}
