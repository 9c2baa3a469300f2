//! Sparse propagation operators derived from a raw adjacency.

use crate::ndtape::SparseMatrix;
use crate::{Error, Result};

/// `A + I` with unit weights on the diagonal.
pub fn add_self_loops(adjacency: &SparseMatrix) -> SparseMatrix {
    let n = adjacency.n_rows();
    let mut trip = Vec::with_capacity(adjacency.nnz() + n);
    for r in 0..n {
        let (cols, vals) = adjacency.row(r);
        trip.extend(cols.iter().zip(vals).filter(|(&c, _)| c != r).map(|(&c, &v)| (r, c, v)));
        trip.push((r, r, 1.0));
    }
    SparseMatrix::from_triplets(n, n, &trip).expect("indices come from a valid matrix")
}

/// Symmetric normalization `D^-1/2 (A + I) D^-1/2`, degrees taken on `A + I`.
pub fn normalize_adjacency(adjacency: &SparseMatrix) -> SparseMatrix {
    let a = add_self_loops(adjacency);
    let deg = a.row_sums();
    let mut vals = a.vals().to_vec();
    for r in 0..a.n_rows() {
        for k in a.row_ptr()[r]..a.row_ptr()[r + 1] {
            vals[k] /= (deg[r] * deg[a.col_idx()[k]]).sqrt();
        }
    }
    SparseMatrix::from_csr(a.n_rows(), a.n_cols(), a.row_ptr().to_vec(), a.col_idx().to_vec(), vals)
        .expect("structure unchanged")
}

/// Row-stochastic neighbour mean: entry `1/deg(i)` for each neighbour `j`;
/// isolated nodes get an empty row.
pub fn mean_aggregation_operator(adjacency: &SparseMatrix) -> SparseMatrix {
    let mut vals = Vec::with_capacity(adjacency.nnz());
    for r in 0..adjacency.n_rows() {
        let deg = adjacency.row(r).0.len();
        vals.extend(std::iter::repeat_n(1.0 / deg as f64, deg));
    }
    SparseMatrix::from_csr(
        adjacency.n_rows(),
        adjacency.n_cols(),
        adjacency.row_ptr().to_vec(),
        adjacency.col_idx().to_vec(),
        vals,
    )
    .expect("structure unchanged")
}

/// `M x N` operator whose product with node embeddings gives per-graph means.
pub fn membership_mean_operator(membership: &[usize], num_graphs: usize) -> Result<SparseMatrix> {
    let mut counts = vec![0usize; num_graphs];
    for &g in membership {
        if g >= num_graphs {
            return Err(Error::Dataset(format!("node assigned to graph {} of {}", g, num_graphs)));
        }
        counts[g] += 1;
    }
    if let Some(g) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Dataset(format!("graph {} has no nodes", g)));
    }
    let trip: Vec<_> = membership.iter().enumerate().map(|(i, &g)| (g, i, 1.0 / counts[g] as f64)).collect();
    SparseMatrix::from_triplets(num_graphs, membership.len(), &trip)
}
