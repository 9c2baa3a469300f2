use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{dim_err, Error, Result};

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within each row; duplicate
/// triplets are summed on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Build from raw CSR arrays, validating every structural invariant.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        vals: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != n_rows + 1 || row_ptr[0] != 0 {
            return Err(dim_err!("row_ptr must have length n_rows+1 and start at 0"));
        }
        if row_ptr[n_rows] != col_idx.len() || col_idx.len() != vals.len() {
            return Err(dim_err!("row_ptr end, col_idx and vals lengths disagree"));
        }
        for r in 0..n_rows {
            let (s, e) = (row_ptr[r], row_ptr[r + 1]);
            if s > e {
                return Err(dim_err!("row_ptr not monotone at row {}", r));
            }
            for k in s..e {
                if col_idx[k] >= n_cols {
                    return Err(dim_err!("column {} out of range in row {}", col_idx[k], r));
                }
                if k > s && col_idx[k] <= col_idx[k - 1] {
                    return Err(dim_err!("columns not strictly increasing in row {}", r));
                }
            }
        }
        Ok(Self { n_rows, n_cols, row_ptr, col_idx, vals })
    }

    /// Build from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, c, _) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(dim_err!("triplet ({}, {}) outside {}x{}", r, c, n_rows, n_cols));
            }
            counts[r + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut entries = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            entries[next[r]] = (c, v);
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut vals = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for r in 0..n_rows {
            let row = &mut entries[counts[r]..counts[r + 1]];
            row.sort_by_key(|e| e.0);
            for &(c, v) in row.iter() {
                if col_idx.len() > row_ptr[r] && *col_idx.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self { n_rows, n_cols, row_ptr, col_idx, vals })
    }

    /// Keep the nonzero entries of a dense matrix.
    pub fn from_dense(t: &Tensor) -> Self {
        let (r, c) = t.dims();
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        for i in 0..r {
            for (j, &v) in t.row(i).iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { n_rows: r, n_cols: c, row_ptr, col_idx, vals }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, row_ptr: vec![0; n_rows + 1], col_idx: vec![], vals: vec![] }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn vals(&self) -> &[f64] {
        &self.vals
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[s..e], &self.vals[s..e])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Tensor {
        let mut t = Tensor::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                t.set(r, c, v);
            }
        }
        t
    }

    pub fn transpose(&self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                triplets.push((c, r, v));
            }
        }
        Self::from_triplets(self.n_cols, self.n_rows, &triplets).expect("transpose stays in bounds")
    }

    pub fn is_symmetric(&self) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        (0..self.n_rows).all(|r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).all(|(&c, &v)| self.get(c, r) == v && self.row(c).0.binary_search(&r).is_ok())
        })
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.row(r).1.iter().sum()).collect()
    }

    /// Dense product `self * b` (`b` is `n_cols x n`).
    pub fn spmm(&self, b: &Tensor) -> Result<Tensor> {
        let (k, n) = b.dims();
        if k != self.n_cols {
            return Err(dim_err!("spmm {}x{} by {}x{}", self.n_rows, self.n_cols, k, n));
        }
        let mut out = Tensor::zeros(self.n_rows, n);
        let bd = b.data();
        let od = out.data_mut();
        for r in 0..self.n_rows {
            let orow = &mut od[r * n..(r + 1) * n];
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let brow = &bd[c * n..(c + 1) * n];
                for (o, &x) in orow.iter_mut().zip(brow) {
                    *o += v * x;
                }
            }
        }
        Ok(out)
    }

    /// Dense product `self^T * g` (`g` is `n_rows x n`), accumulated into `out`.
    pub(crate) fn spmm_transpose_into(&self, g: &Tensor, out: &mut Tensor) {
        let n = g.cols();
        let gd = g.data();
        let od = out.data_mut();
        for r in 0..self.n_rows {
            let grow = &gd[r * n..(r + 1) * n];
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let orow = &mut od[c * n..(c + 1) * n];
                for (o, &x) in orow.iter_mut().zip(grow) {
                    *o += v * x;
                }
            }
        }
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.vals.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Numeric("sparse operator holds a non-finite value".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = SparseMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 0.5), (1, 1, 4.0)]).unwrap();
        assert_eq!(m.row_ptr(), &[0, 2, 3]);
        assert_eq!(m.col_idx(), &[0, 2, 1]);
        assert_eq!(m.vals(), &[2.0, 1.5, 4.0]);
    }

    #[test]
    fn from_csr_rejects_unsorted_columns() {
        assert!(SparseMatrix::from_csr(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 3, vec![0, 2], vec![1, 3], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 3, vec![0, 2], vec![0, 2], vec![1.0, 1.0]).is_ok());
    }

    #[test]
    fn empty_operator_gives_zero_product() {
        let x = Tensor::matrix(3, 2, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let z = SparseMatrix::zeros(4, 3).spmm(&x).unwrap();
        assert_eq!(z, Tensor::zeros(4, 2));
    }

    #[test]
    fn transpose_roundtrip() {
        let m = SparseMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (1, 0, -2.0)]).unwrap();
        assert_eq!(m.transpose().transpose(), m);
        assert_eq!(m.transpose().to_dense(), m.to_dense().transpose());
    }
}
