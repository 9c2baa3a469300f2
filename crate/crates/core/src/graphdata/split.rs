use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::param_err;
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Default train/val/test ratios for node classification.
pub const NODE_SPLIT: [f64; 3] = [0.70, 0.15, 0.15];
/// Default train/val/test ratios for graph classification.
pub const GRAPH_SPLIT: [f64; 3] = [0.75, 0.10, 0.15];

/// Disjoint train/validation/test index sets, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl Split {
    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Check that the three sets partition `0..n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.val).chain(&self.test) {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Dataset(format!("split index {} repeated or outside 0..{}", i, n)));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Dataset(format!("split does not cover all {} indices", n)));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Shuffle `0..n` with the seeded generator and cut it into
/// `floor(r0 n)`, `floor(r1 n)` and the remainder.
pub fn split_indices(n: usize, ratios: [f64; 3], seed: u64) -> Result<Split> {
    if n < 3 {
        return Err(param_err!("cannot split {} items three ways", n));
    }
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(param_err!("split ratios {:?} must be in [0,1] and sum to 1", ratios));
    }
    // The small offset keeps products such as 0.29 * 100 from flooring low.
    let n_train = (ratios[0] * n as f64 + 1e-9).floor() as usize;
    let n_val = (ratios[1] * n as f64 + 1e-9).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    SplitMix64::new(seed).shuffle(&mut order);
    let sorted = |s: &[usize]| {
        let mut v = s.to_vec();
        v.sort_unstable();
        v
    };
    Ok(Split {
        train: sorted(&order[..n_train]),
        val: sorted(&order[n_train..n_train + n_val]),
        test: sorted(&order[n_train + n_val..]),
        seed,
    })
}

pub fn split_nodes(n: usize, seed: u64) -> Result<Split> {
    split_indices(n, NODE_SPLIT, seed)
}

pub fn split_graphs(m: usize, seed: u64) -> Result<Split> {
    split_indices(m, GRAPH_SPLIT, seed)
}
