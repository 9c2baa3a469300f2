use crate::error::param_err;
use crate::ndtape::{SparseMatrix, Tensor};
use crate::rng::SplitMix64;
use crate::Result;

use super::undirected_adjacency;

/// Preferential attachment. Nodes `0..m` start as a clique; every later node
/// picks `m` distinct earlier nodes, each draw proportional to current degree
/// among the not-yet-picked candidates (uniform if all have degree zero).
pub fn gen_barabasi_albert(n: usize, m: usize, seed: u64) -> Result<SparseMatrix> {
    if m < 1 || m >= n {
        return Err(param_err!("Barabasi-Albert needs 1 <= m < n, got m={} n={}", m, n));
    }
    let mut rng = SplitMix64::new(seed);
    let mut degree = vec![0usize; n];
    let mut pairs = Vec::with_capacity(m * (m - 1) / 2 + (n - m) * m);
    for u in 0..m {
        for v in u + 1..m {
            pairs.push((u, v));
            degree[u] += 1;
            degree[v] += 1;
        }
    }
    for v in m..n {
        let mut picked = vec![false; v];
        let mut targets = Vec::with_capacity(m);
        for _ in 0..m {
            let total: usize = (0..v).filter(|&u| !picked[u]).map(|u| degree[u]).sum();
            let choice = if total == 0 {
                let free: Vec<usize> = (0..v).filter(|&u| !picked[u]).collect();
                free[rng.below(free.len())]
            } else {
                let mut r = rng.below(total);
                let mut chosen = None;
                for u in (0..v).filter(|&u| !picked[u]) {
                    if r < degree[u] {
                        chosen = Some(u);
                        break;
                    }
                    r -= degree[u];
                }
                chosen.expect("draw lies below the total weight")
            };
            picked[choice] = true;
            targets.push(choice);
        }
        for &u in &targets {
            pairs.push((u, v));
            degree[u] += 1;
            degree[v] += 1;
        }
    }
    Ok(undirected_adjacency(n, &pairs)?.0)
}

/// Erdos-Renyi graph: pairs `(i, j)`, `i < j`, visited in lexicographic order,
/// each kept when a uniform draw falls below `p`.
pub fn gen_random(n: usize, p: f64, seed: u64) -> Result<SparseMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(param_err!("edge probability {} outside [0, 1]", p));
    }
    let mut rng = SplitMix64::new(seed);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.uniform() < p {
                pairs.push((i, j));
            }
        }
    }
    Ok(undirected_adjacency(n, &pairs)?.0)
}

/// `x + L` with `L` i.i.d. Laplace(0, scale), drawn row-major.
pub fn add_laplace_noise(x: &Tensor, scale: f64, seed: u64) -> Result<Tensor> {
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(param_err!("noise scale must be finite and >= 0, got {}", scale));
    }
    if scale == 0.0 {
        return Ok(x.clone());
    }
    let mut rng = SplitMix64::new(seed);
    Ok(x.map(|v| v + rng.laplace(scale)))
}
