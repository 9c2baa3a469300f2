use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spec::{Architecture, ModelSpec, Task};
use crate::blob;
use crate::ndtape::Tensor;
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Named parameter tensors in a fixed order, with their Glorot fan sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub names: Vec<String>,
    pub tensors: Vec<Tensor>,
}

impl ModelParams {
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }
}

/// Kind of a parameter slot in a layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Init {
    Glorot { fan_in: usize, fan_out: usize },
    Zero,
}

/// Parameter names, shapes and initializers for a spec, in storage order.
pub(crate) fn layout(spec: &ModelSpec) -> Vec<(String, usize, usize, Init)> {
    let mut out = Vec::new();
    let glorot = |r: usize, c: usize| Init::Glorot { fan_in: r, fan_out: c };
    let push_layer = |out: &mut Vec<_>, l: usize, din: usize, width: usize, heads: usize| {
        let p = |s: &str| format!("layer{}.{}", l, s);
        match spec.architecture {
            Architecture::Gcn | Architecture::Mlp => {
                out.push((p("weight"), din, width, glorot(din, width)));
                out.push((p("bias"), 1, width, Init::Zero));
            }
            Architecture::Sage => {
                out.push((p("weight_self"), din, width, glorot(din, width)));
                out.push((p("weight_neigh"), din, width, glorot(din, width)));
                out.push((p("bias"), 1, width, Init::Zero));
            }
            Architecture::Gat => {
                let w = width * heads;
                out.push((p("weight"), din, w, glorot(din, w)));
                out.push((p("att_src"), 1, w, glorot(width, 1)));
                out.push((p("att_dst"), 1, w, glorot(width, 1)));
                let bias_w = if l < spec.hidden.len() { w } else { width };
                out.push((p("bias"), 1, bias_w, Init::Zero));
            }
        }
    };
    let mut din = spec.input_dim;
    for (l, &h) in spec.hidden.iter().enumerate() {
        push_layer(&mut out, l, din, h, spec.heads);
        din = spec.hidden_out(l);
    }
    match spec.task {
        Task::Node => push_layer(&mut out, spec.hidden.len(), din, spec.num_classes, spec.output_heads),
        Task::Graph => {
            out.push(("classifier.weight".into(), din, spec.num_classes, glorot(din, spec.num_classes)));
            out.push(("classifier.bias".into(), 1, spec.num_classes, Init::Zero));
        }
    }
    out
}

/// Glorot bound `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Glorot-uniform weights and zero biases, drawn in layout order from one
/// seeded stream.
pub fn init_params(spec: &ModelSpec, seed: u64) -> Result<ModelParams> {
    spec.validate()?;
    let mut rng = SplitMix64::new(seed);
    let mut names = Vec::new();
    let mut tensors = Vec::new();
    for (name, r, c, init) in layout(spec) {
        let t = match init {
            Init::Zero => Tensor::zeros(r, c),
            Init::Glorot { fan_in, fan_out } => {
                let b = glorot_bound(fan_in, fan_out);
                Tensor::matrix(r, c, (0..r * c).map(|_| rng.uniform_range(-b, b)).collect())?
            }
        };
        names.push(name);
        tensors.push(t);
    }
    Ok(ModelParams { names, tensors })
}

/// Glorot bounds per parameter (zero for biases), matching [`init_params`].
pub fn init_bounds(spec: &ModelSpec) -> Vec<(String, f64)> {
    layout(spec)
        .into_iter()
        .map(|(n, _, _, init)| match init {
            Init::Zero => (n, 0.0),
            Init::Glorot { fan_in, fan_out } => (n, glorot_bound(fan_in, fan_out)),
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    spec: ModelSpec,
    seed: u64,
    #[serde(default)]
    extra: serde_json::Value,
}

/// Write parameters with their spec and seed; see [`crate::blob`].
pub fn save_checkpoint(dir: &Path, spec: &ModelSpec, seed: u64, params: &ModelParams, extra: serde_json::Value) -> Result<()> {
    let meta = serde_json::to_value(CheckpointMeta { spec: spec.clone(), seed, extra })?;
    let named: Vec<(String, &Tensor)> = params.names.iter().cloned().zip(&params.tensors).collect();
    blob::save(dir, meta, &named)
}

/// Read a checkpoint and check it against the layout of its stored spec.
pub fn load_checkpoint(dir: &Path) -> Result<(ModelSpec, u64, ModelParams)> {
    let (meta, named) = blob::load(dir)?;
    let meta: CheckpointMeta = serde_json::from_value(meta)?;
    let expected = layout(&meta.spec);
    if expected.len() != named.len()
        || expected.iter().zip(&named).any(|((n, r, c, _), (m, t))| n != m || t.shape() != [*r, *c])
    {
        return Err(Error::Dataset(format!("{}: tensors do not match the stored spec", dir.display())));
    }
    let (names, tensors) = named.into_iter().unzip();
    Ok((meta.spec, meta.seed, ModelParams { names, tensors }))
}
