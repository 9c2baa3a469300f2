use std::sync::Arc;

use super::config::{PenaltySign, Variant};
use super::weighting::UnitVars;
use crate::ndtape::{Tape, Tensor, Var};
use crate::Result;

/// The coefficients that shape a member's loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub variant: Variant,
    pub gamma: f64,
    pub beta: f64,
    pub penalty_sign: PenaltySign,
}

/// Scalar handles of every loss component; absent terms are `None`.
#[derive(Debug, Clone, Copy)]
pub struct LossTerms {
    pub supervised: Var,
    pub mutual: Option<Var>,
    pub l1: Option<Var>,
    /// Mean per-row `sum p ln p` on the training rows.
    pub neg_entropy: Option<Var>,
    pub total: Var,
}

/// Probabilities at temperature `t`, restricted to `rows` when given.
pub fn member_probs(tape: &mut Tape, logits: Var, rows: Option<&Arc<[usize]>>, t: f64) -> Result<Var> {
    let z = match rows {
        Some(r) => tape.select_rows(logits, r)?,
        None => logits,
    };
    tape.softmax_rows(z, t)
}

/// Assemble
/// `CE + mean_k KL(peer_k || own) + beta (|χ|₁ + |φ|₁) - gamma * entropy(probs)`
/// keeping only the terms the variant enables.
///
/// `own` is the member's (possibly weighted) distribution on the training
/// rows, `probs` the unweighted one, and `peers` the detached snapshots of
/// every other member, each aligned with `own`.
#[allow(clippy::too_many_arguments)]
pub fn mutual_loss(
    tape: &mut Tape,
    w: &LossWeights,
    logits: Var,
    labels: &[usize],
    train: &[usize],
    own: Var,
    probs: Var,
    peers: &[Tensor],
    unit: Option<&UnitVars>,
) -> Result<LossTerms> {
    let supervised = tape.cross_entropy(logits, labels, train)?;
    let mut total = supervised;
    let mut terms = LossTerms { supervised, mutual: None, l1: None, neg_entropy: None, total };
    if !w.variant.mutual() {
        return Ok(terms);
    }
    let mut kl_sum = None;
    for peer in peers {
        let p = tape.constant(peer.clone())?;
        let kl = tape.kl_divergence(p, own)?;
        kl_sum = Some(match kl_sum {
            None => kl,
            Some(acc) => tape.add(acc, kl)?,
        });
    }
    if let Some(sum) = kl_sum {
        let mean = tape.scale(sum, 1.0 / peers.len() as f64)?;
        total = tape.add(total, mean)?;
        terms.mutual = Some(mean);
    }
    if w.variant.weighting() {
        if let Some(u) = unit {
            let a = tape.l1_norm(u.chi)?;
            let b = tape.l1_norm(u.phi)?;
            let s = tape.add(a, b)?;
            let reg = tape.scale(s, w.beta)?;
            total = tape.add(total, reg)?;
            terms.l1 = Some(reg);
        }
    }
    if w.variant.penalty() {
        let rows = tape.entropy_rows(probs)?;
        let mean = tape.mean_rows(rows)?;
        let factor = match w.penalty_sign {
            PenaltySign::EntropyBonus => w.gamma,
            PenaltySign::Literal => -w.gamma,
        };
        let pen = tape.scale(mean, factor)?;
        total = tape.add(total, pen)?;
        terms.neg_entropy = Some(mean);
    }
    terms.total = total;
    Ok(terms)
}
