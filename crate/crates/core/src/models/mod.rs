//! GCN, GAT, GraphSage and MLP forward passes recorded on an [`crate::ndtape::Tape`].
//!
//! Layer rules, with `H` the previous layer output:
//!
//! * GCN: `H' = act(Â H W + b)`, `Â = D^-1/2 (A + I) D^-1/2`
//! * GraphSage: `H' = act(H W_self + M H W_neigh + b)`, `M` the neighbour mean
//! * GAT: per head `e_ij = LeakyReLU(a_src . W h_i + a_dst . W h_j)` over
//!   `j` in `N(i) ∪ {i}`, `α = softmax_j(e)`, `h'_i = Σ_j α_ij W h_j`;
//!   heads are concatenated on hidden layers and averaged on the output layer
//! * MLP: `H' = act(H W + b)`, no graph
//!
//! The activation is ReLU (ELU for GAT) on hidden layers and the identity on
//! the output layer. For graph classification every node layer is hidden and
//! is followed by a per-graph mean readout and a linear classifier.

mod forward;
mod params;
mod spec;

pub use forward::{forward, forward_with, predict, Features, Forward, ModelInput, Operators, Prediction};
pub use params::{glorot_bound, init_bounds, init_params, load_checkpoint, save_checkpoint, ModelParams};
pub use spec::{Architecture, ModelSpec, Task};
