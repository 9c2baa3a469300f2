use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// Largest number of non-zero differences handled by the exact null
/// distribution.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wilcoxon {
    /// Sum of ranks of the positive differences `x - y`.
    pub statistic: f64,
    /// One-sided p-value for the alternative `x > y`.
    pub p_value: f64,
    /// Non-zero differences used.
    pub n: usize,
    pub exact: bool,
}

/// Ranks of `|d|` starting at 1, ties sharing their average rank.
fn average_ranks(abs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..abs.len()).collect();
    order.sort_by(|&a, &b| abs[a].total_cmp(&abs[b]));
    let mut ranks = vec![0.0; abs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && abs[order[j + 1]] == abs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Signed-rank test of paired samples. Zero differences are dropped.
///
/// Up to [`EXACT_LIMIT`] differences the p-value is exact: the null
/// distribution of the statistic over all `2ⁿ` sign assignments is counted
/// on doubled ranks (integers even with ties). Above it, the normal
/// approximation with tie-corrected variance and continuity correction is
/// used.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<Wilcoxon> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!("paired samples of length {} and {}", x.len(), y.len())));
    }
    if x.len() < 5 {
        return Err(Error::Parameter(format!("need at least 5 pairs, got {}", x.len())));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if d.is_empty() {
        return Err(Error::DegenerateData("every difference is zero".into()));
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite difference".into()));
    }
    let n = d.len();
    let ranks = average_ranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let statistic: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();

    if n <= EXACT_LIMIT {
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let total: usize = doubled.iter().sum();
        // counts[s]: sign assignments whose doubled positive-rank sum is s
        let mut counts = vec![0u64; total + 1];
        counts[0] = 1;
        for &r in &doubled {
            for s in (r..=total).rev() {
                counts[s] += counts[s - r];
            }
        }
        let observed = (2.0 * statistic).round() as usize;
        let tail: u64 = counts[observed..].iter().sum();
        let p_value = tail as f64 / (1u64 << n) as f64;
        return Ok(Wilcoxon { statistic, p_value, n, exact: true });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut ties = 0.0;
    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        ties += t * t * t - t;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
    let z = (statistic - mean - 0.5) / var.sqrt();
    let normal = Normal::standard();
    Ok(Wilcoxon { statistic, p_value: normal.sf(z), n, exact: false })
}
