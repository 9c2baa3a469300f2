use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::dim_err;
use crate::ndtape::Tensor;
use crate::{blob, Error, Result};

fn centered(x: &Tensor) -> Tensor {
    let (n, d) = x.dims();
    let mut means = vec![0.0; d];
    for i in 0..n {
        for (m, v) in means.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let mut out = x.clone();
    for i in 0..n {
        for (v, m) in out.row_mut(i).iter_mut().zip(&means) {
            *v -= m;
        }
    }
    out
}

fn frobenius_sq(x: &Tensor) -> f64 {
    x.data().iter().map(|v| v * v).sum()
}

/// Linear CKA between two representations of the same `N` examples:
/// `‖Bᵀ A‖²_F / (‖Aᵀ A‖_F ‖Bᵀ B‖_F)` after centering each column.
/// Returns 0 when either centered matrix vanishes.
pub fn linear_cka(a: &Tensor, b: &Tensor) -> Result<f64> {
    if a.rows() != b.rows() {
        return Err(dim_err!("CKA inputs have {} and {} rows", a.rows(), b.rows()));
    }
    if a.rows() < 2 {
        return Err(dim_err!("CKA needs at least two rows"));
    }
    let (a, b) = (centered(a), centered(b));
    let (at, bt) = (a.transpose(), b.transpose());
    let cross = frobenius_sq(&bt.matmul(&a)?);
    let aa = frobenius_sq(&at.matmul(&a)?).sqrt();
    let bb = frobenius_sq(&bt.matmul(&b)?).sqrt();
    if aa == 0.0 || bb == 0.0 {
        return Ok(0.0);
    }
    Ok(cross / (aa * bb))
}

/// `L_a x L_b` matrix of [`linear_cka`] between every pair of layers.
pub fn cka_matrix(a: &[Tensor], b: &[Tensor]) -> Result<Tensor> {
    let mut out = Tensor::zeros(a.len(), b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out.set(i, j, linear_cka(x, y)?);
        }
    }
    Ok(out)
}

/// Writes the matrix with header `layer,b1,..,bL` and one row `aK,...` per
/// layer of the first model. Layers are numbered from 1.
pub fn write_cka_csv(path: &Path, m: &Tensor) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["layer".to_string()];
    header.extend((1..=m.cols()).map(|j| format!("b{}", j)));
    w.write_record(&header)?;
    for i in 0..m.rows() {
        let mut rec = vec![format!("a{}", i + 1)];
        rec.extend(m.row(i).iter().map(|v| format!("{:.6}", v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-layer activations of one trained model on a fixed node set.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationDump {
    pub meta: DumpMeta,
    pub layers: Vec<Tensor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpMeta {
    pub model: String,
    pub seed: u64,
    pub dataset: String,
}

impl ActivationDump {
    pub fn new(meta: DumpMeta, layers: Vec<Tensor>) -> Result<Self> {
        if let Some(first) = layers.first() {
            if let Some(bad) = layers.iter().position(|l| l.rows() != first.rows()) {
                return Err(dim_err!("layer {} has {} rows, layer 1 has {}", bad + 1, layers[bad].rows(), first.rows()));
            }
        }
        Ok(Self { meta, layers })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let named: Vec<(String, &Tensor)> = self.layers.iter().enumerate().map(|(i, t)| (format!("layer{}", i + 1), t)).collect();
        blob::save(dir, serde_json::to_value(&self.meta)?, &named)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let (meta, tensors) = blob::load(dir)?;
        Self::new(serde_json::from_value(meta)?, tensors.into_iter().map(|(_, t)| t).collect())
    }
}
