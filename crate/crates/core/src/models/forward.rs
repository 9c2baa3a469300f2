use std::sync::Arc;

use super::params::ModelParams;
use super::spec::{Architecture, ModelSpec, Task};
use crate::error::dim_err;
use crate::graphdata::{add_self_loops, mean_aggregation_operator, membership_mean_operator, normalize_adjacency};
use crate::ndtape::{SparseMatrix, Tape, Tensor, Var};
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Input node features, kept sparse when mostly zero.
#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Dense(Arc<Tensor>),
    Sparse(Arc<SparseMatrix>),
}

impl Features {
    /// Density below which the sparse form is used.
    pub const SPARSE_BELOW: f64 = 0.25;

    pub fn new(x: &Tensor) -> Self {
        let nnz = x.data().iter().filter(|&&v| v != 0.0).count();
        if (nnz as f64) < Self::SPARSE_BELOW * x.len() as f64 {
            Features::Sparse(Arc::new(SparseMatrix::from_dense(x)))
        } else {
            Features::Dense(Arc::new(x.clone()))
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            Features::Dense(t) => t.dims(),
            Features::Sparse(s) => (s.n_rows(), s.n_cols()),
        }
    }

    pub fn to_dense(&self) -> Tensor {
        match self {
            Features::Dense(t) => (**t).clone(),
            Features::Sparse(s) => s.to_dense(),
        }
    }
}

/// Propagation operators of one graph, shared by every architecture.
#[derive(Debug, Clone)]
pub struct Operators {
    /// `D^-1/2 (A + I) D^-1/2` for GCN.
    pub normalized: Arc<SparseMatrix>,
    /// Neighbour mean for GraphSage.
    pub mean: Arc<SparseMatrix>,
    /// `A + I` neighbourhoods for GAT.
    pub attention: Arc<SparseMatrix>,
}

impl Operators {
    pub fn new(adjacency: &SparseMatrix) -> Self {
        Self {
            normalized: Arc::new(normalize_adjacency(adjacency)),
            mean: Arc::new(mean_aggregation_operator(adjacency)),
            attention: Arc::new(add_self_loops(adjacency)),
        }
    }
}

/// Everything a forward pass reads besides its parameters.
#[derive(Debug, Clone)]
pub struct ModelInput {
    pub features: Features,
    pub operators: Operators,
    /// `M x N` per-graph mean operator for the graph task.
    pub readout: Option<Arc<SparseMatrix>>,
}

impl ModelInput {
    pub fn nodes(features: Features, adjacency: &SparseMatrix) -> Result<Self> {
        if features.dims().0 != adjacency.n_rows() {
            return Err(dim_err!("{} feature rows for {} nodes", features.dims().0, adjacency.n_rows()));
        }
        Ok(Self { features, operators: Operators::new(adjacency), readout: None })
    }

    /// Block-diagonal batch of graphs with node-to-graph `membership`.
    pub fn graphs(features: Features, adjacency: &SparseMatrix, membership: &[usize], num_graphs: usize) -> Result<Self> {
        let mut input = Self::nodes(features, adjacency)?;
        if membership.len() != adjacency.n_rows() {
            return Err(dim_err!("membership covers {} of {} nodes", membership.len(), adjacency.n_rows()));
        }
        input.readout = Some(Arc::new(membership_mean_operator(membership, num_graphs)?));
        Ok(input)
    }

    pub fn num_nodes(&self) -> usize {
        self.features.dims().0
    }

    /// Rows of the output: nodes, or graphs when a readout is present.
    pub fn num_outputs(&self) -> usize {
        self.readout.as_ref().map_or(self.num_nodes(), |r| r.n_rows())
    }
}

/// Handles into a tape after a forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub logits: Var,
    /// Output of every node layer (post-activation; the last node-task entry
    /// is the logits).
    pub activations: Vec<Var>,
    /// GAT attention nodes, one per layer; see [`Tape::attention_coefficients`].
    pub attention: Vec<Var>,
    /// Parameter leaves in [`ModelParams`] order.
    pub params: Vec<Var>,
}

/// Values of a forward pass without gradients.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub logits: Tensor,
    pub activations: Vec<Tensor>,
}

enum LayerInput<'a> {
    Features(&'a Features),
    Hidden(Var),
}

fn project(tape: &mut Tape, x: &LayerInput, w: Var) -> Result<Var> {
    match x {
        LayerInput::Hidden(h) => tape.matmul(*h, w),
        LayerInput::Features(Features::Sparse(s)) => tape.spmm(s, w),
        LayerInput::Features(Features::Dense(t)) => {
            let c = tape.constant((**t).clone())?;
            tape.matmul(c, w)
        }
    }
}

/// Record a forward pass on `tape`, registering the parameters as trainable
/// leaves. Dropout is applied to hidden representations only when `dropout`
/// is given and the spec's rate is positive.
pub fn forward(
    tape: &mut Tape,
    spec: &ModelSpec,
    params: &ModelParams,
    input: &ModelInput,
    dropout: Option<&mut SplitMix64>,
) -> Result<Forward> {
    let vars = params.tensors.iter().map(|t| tape.param(t.clone())).collect::<Result<Vec<_>>>()?;
    forward_with(tape, spec, &vars, input, dropout)
}

/// Like [`forward`] with parameters already on the tape.
pub fn forward_with(
    tape: &mut Tape,
    spec: &ModelSpec,
    vars: &[Var],
    input: &ModelInput,
    mut dropout: Option<&mut SplitMix64>,
) -> Result<Forward> {
    let (_, d) = input.features.dims();
    if d != spec.input_dim {
        return Err(dim_err!("{} expects {} input features, got {}", spec.architecture, spec.input_dim, d));
    }
    if spec.task == Task::Graph && input.readout.is_none() {
        return Err(Error::Config("graph task needs a readout operator".into()));
    }
    let mut slots = vars.iter().copied();
    let mut next = || slots.next().ok_or_else(|| dim_err!("too few parameters for {}", spec.architecture));
    let mut activations = Vec::new();
    let mut attention = Vec::new();
    let mut x = LayerInput::Features(&input.features);
    let n_layers = spec.node_layers();
    for l in 0..n_layers {
        let hidden = spec.task == Task::Graph || l + 1 < n_layers;
        let out = match spec.architecture {
            Architecture::Gcn => {
                let (w, b) = (next()?, next()?);
                let xw = project(tape, &x, w)?;
                let agg = tape.spmm(&input.operators.normalized, xw)?;
                tape.add(agg, b)?
            }
            Architecture::Mlp => {
                let (w, b) = (next()?, next()?);
                let xw = project(tape, &x, w)?;
                tape.add(xw, b)?
            }
            Architecture::Sage => {
                let (ws, wn, b) = (next()?, next()?, next()?);
                let own = project(tape, &x, ws)?;
                let nb = project(tape, &x, wn)?;
                let nb = tape.spmm(&input.operators.mean, nb)?;
                let s = tape.add(own, nb)?;
                tape.add(s, b)?
            }
            Architecture::Gat => {
                let (w, a_src, a_dst, b) = (next()?, next()?, next()?, next()?);
                let heads = if hidden { spec.heads } else { spec.output_heads };
                let hw = project(tape, &x, w)?;
                let s = tape.head_dot(hw, a_src, heads)?;
                let t = tape.head_dot(hw, a_dst, heads)?;
                let mut o = tape.graph_attention(hw, s, t, &input.operators.attention, heads, spec.attention_slope)?;
                attention.push(o);
                if !hidden && heads > 1 {
                    o = average_heads(tape, o, heads)?;
                }
                tape.add(o, b)?
            }
        };
        let out = if hidden {
            let a = match spec.architecture {
                Architecture::Gat => tape.elu(out)?,
                _ => tape.relu(out)?,
            };
            match dropout.as_deref_mut() {
                Some(rng) if spec.dropout > 0.0 => apply_dropout(tape, a, spec.dropout, rng)?,
                _ => a,
            }
        } else {
            out
        };
        activations.push(out);
        x = LayerInput::Hidden(out);
    }
    let last = *activations.last().expect("at least one layer");
    let logits = match &input.readout {
        Some(r) if spec.task == Task::Graph => {
            let pooled = tape.spmm(r, last)?;
            let (w, b) = (next()?, next()?);
            let z = tape.matmul(pooled, w)?;
            tape.add(z, b)?
        }
        _ => last,
    };
    if slots.next().is_some() {
        return Err(dim_err!("too many parameters for {}", spec.architecture));
    }
    Ok(Forward { logits, activations, attention, params: vars.to_vec() })
}

fn average_heads(tape: &mut Tape, o: Var, heads: usize) -> Result<Var> {
    let width = tape.value(o).cols() / heads;
    let mut avg = Tensor::zeros(heads * width, width);
    for k in 0..heads {
        for c in 0..width {
            avg.set(k * width + c, c, 1.0 / heads as f64);
        }
    }
    let avg = tape.constant(avg)?;
    tape.matmul(o, avg)
}

fn apply_dropout(tape: &mut Tape, a: Var, p: f64, rng: &mut SplitMix64) -> Result<Var> {
    let (r, c) = tape.value(a).dims();
    let keep = 1.0 / (1.0 - p);
    let mask = Tensor::matrix(r, c, (0..r * c).map(|_| if rng.uniform() < p { 0.0 } else { keep }).collect())?;
    let m = tape.constant(mask)?;
    tape.hadamard(a, m)
}

/// Forward values on a throwaway tape.
pub fn predict(spec: &ModelSpec, params: &ModelParams, input: &ModelInput) -> Result<Prediction> {
    let mut tape = Tape::new();
    let vars = params.tensors.iter().map(|t| tape.constant(t.clone())).collect::<Result<Vec<_>>>()?;
    let f = forward_with(&mut tape, spec, &vars, input, None)?;
    Ok(Prediction {
        logits: tape.value(f.logits).clone(),
        activations: f.activations.iter().map(|&v| tape.value(v).clone()).collect(),
    })
}
