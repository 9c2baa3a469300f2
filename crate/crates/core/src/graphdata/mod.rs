//! Graph datasets: in-memory types, corpus loaders, splits, structural
//! operators, synthetic generators and feature noise.

mod generate;
mod loaders;
mod operators;
mod split;

pub use generate::{add_laplace_noise, gen_barabasi_albert, gen_random};
pub use loaders::{
    load_citation, load_csv_triplet, load_tabular, load_tu, parse_tabular, FeatureSource, LoadReport, Tabular,
};
pub use operators::{add_self_loops, mean_aggregation_operator, membership_mean_operator, normalize_adjacency};
pub use split::{split_graphs, split_indices, split_nodes, Split, GRAPH_SPLIT, NODE_SPLIT};

use crate::error::dim_err;
use crate::ndtape::{SparseMatrix, Tensor};
use crate::{Error, Result};

/// A single attributed graph with one class label per node.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset {
    features: Tensor,
    labels: Vec<usize>,
    num_classes: usize,
    adjacency: SparseMatrix,
}

impl GraphDataset {
    /// Validates that the adjacency is square, symmetric and loop-free, and
    /// that features and labels cover every node.
    pub fn new(features: Tensor, labels: Vec<usize>, num_classes: usize, adjacency: SparseMatrix) -> Result<Self> {
        let n = adjacency.n_rows();
        check_structure(&adjacency)?;
        if features.rows() != n || labels.len() != n {
            return Err(dim_err!(
                "{} nodes but {} feature rows and {} labels",
                n,
                features.rows(),
                labels.len()
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::Dataset(format!("label {} outside [0, {})", bad, num_classes)));
        }
        if !features.is_finite() {
            return Err(Error::Dataset("features contain non-finite values".into()));
        }
        Ok(Self { features, labels, num_classes, adjacency })
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.n_rows()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Raw symmetric adjacency without self-loops.
    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    /// Same graph and labels with a replacement feature matrix.
    pub fn with_features(&self, features: Tensor) -> Result<Self> {
        Self::new(features, self.labels.clone(), self.num_classes, self.adjacency.clone())
    }
}

/// One member of a graph collection.
#[derive(Debug, Clone, PartialEq)]
pub struct MemberGraph {
    pub features: Tensor,
    pub adjacency: SparseMatrix,
}

impl MemberGraph {
    pub fn num_nodes(&self) -> usize {
        self.adjacency.n_rows()
    }
}

/// A labelled set of graphs for graph classification.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphCollection {
    graphs: Vec<MemberGraph>,
    labels: Vec<usize>,
    num_classes: usize,
}

/// Several member graphs stacked into one block-diagonal graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBatch {
    pub features: Tensor,
    pub adjacency: SparseMatrix,
    /// Batch-local graph index of every node.
    pub membership: Vec<usize>,
    pub num_graphs: usize,
}

impl GraphCollection {
    pub fn new(graphs: Vec<MemberGraph>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if graphs.is_empty() {
            return Err(Error::Dataset("graph collection is empty".into()));
        }
        if graphs.len() != labels.len() {
            return Err(dim_err!("{} graphs but {} labels", graphs.len(), labels.len()));
        }
        let d = graphs[0].features.cols();
        for (i, g) in graphs.iter().enumerate() {
            check_structure(&g.adjacency)?;
            if g.num_nodes() == 0 {
                return Err(Error::Dataset(format!("graph {} has no nodes", i)));
            }
            if g.features.rows() != g.num_nodes() || g.features.cols() != d {
                return Err(dim_err!("graph {}: features {:?} for {} nodes, expected width {}", i, g.features.shape(), g.num_nodes(), d));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::Dataset(format!("graph label {} outside [0, {})", bad, num_classes)));
        }
        Ok(Self { graphs, labels, num_classes })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn graphs(&self) -> &[MemberGraph] {
        &self.graphs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_features(&self) -> usize {
        self.graphs[0].features.cols()
    }

    /// Apply `f` to every member's feature matrix.
    pub fn map_features(&self, mut f: impl FnMut(usize, &Tensor) -> Result<Tensor>) -> Result<Self> {
        let graphs = self
            .graphs
            .iter()
            .enumerate()
            .map(|(i, g)| Ok(MemberGraph { features: f(i, &g.features)?, adjacency: g.adjacency.clone() }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(graphs, self.labels.clone(), self.num_classes)
    }

    /// Block-diagonal union of the selected graphs, in the given order.
    pub fn batch(&self, indices: &[usize]) -> Result<GraphBatch> {
        let d = self.num_features();
        let mut feats = Vec::new();
        let mut trip = Vec::new();
        let mut membership = Vec::new();
        let mut offset = 0;
        for (b, &gi) in indices.iter().enumerate() {
            let g = self.graphs.get(gi).ok_or_else(|| dim_err!("graph index {} out of range", gi))?;
            feats.extend_from_slice(g.features.data());
            for r in 0..g.num_nodes() {
                let (cols, vals) = g.adjacency.row(r);
                trip.extend(cols.iter().zip(vals).map(|(&c, &v)| (offset + r, offset + c, v)));
            }
            membership.extend(std::iter::repeat_n(b, g.num_nodes()));
            offset += g.num_nodes();
        }
        Ok(GraphBatch {
            features: Tensor::matrix(offset, d, feats)?,
            adjacency: SparseMatrix::from_triplets(offset, offset, &trip)?,
            membership,
            num_graphs: indices.len(),
        })
    }
}

fn check_structure(a: &SparseMatrix) -> Result<()> {
    if a.n_rows() != a.n_cols() {
        return Err(dim_err!("adjacency is {}x{}", a.n_rows(), a.n_cols()));
    }
    for r in 0..a.n_rows() {
        if a.row(r).0.contains(&r) {
            return Err(Error::Dataset(format!("self-loop stored at node {}", r)));
        }
    }
    if !a.is_symmetric() {
        return Err(Error::Dataset("adjacency is not symmetric".into()));
    }
    Ok(())
}

/// Symmetric 0/1 adjacency from undirected pairs; self-loops and repeats are
/// removed. Returns the matrix and the number of (self-loops, duplicates).
pub fn undirected_adjacency(n: usize, pairs: &[(usize, usize)]) -> Result<(SparseMatrix, usize, usize)> {
    let mut self_loops = 0;
    let mut keys: Vec<(usize, usize)> = Vec::with_capacity(pairs.len());
    for &(u, v) in pairs {
        if u >= n || v >= n {
            return Err(dim_err!("edge ({}, {}) outside {} nodes", u, v, n));
        }
        if u == v {
            self_loops += 1;
            continue;
        }
        keys.push((u.min(v), u.max(v)));
    }
    let before = keys.len();
    keys.sort_unstable();
    keys.dedup();
    let duplicates = before - keys.len();
    let trip: Vec<_> = keys.iter().flat_map(|&(u, v)| [(u, v, 1.0), (v, u, 1.0)]).collect();
    Ok((SparseMatrix::from_triplets(n, n, &trip)?, self_loops, duplicates))
}
