use rayon::prelude::*;

use super::{DenseMatrix, TensorError, PAR_MIN_WORK};

/// Compressed sparse row matrix of `f64`.
///
/// Column indices are strictly increasing within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, TensorError> {
        if offsets.len() != rows + 1
            || offsets[0] != 0
            || offsets[rows] != indices.len()
            || indices.len() != values.len()
        {
            return Err(TensorError::InvalidCsr("offset/length mismatch"));
        }
        for r in 0..rows {
            let (lo, hi) = (offsets[r], offsets[r + 1]);
            if lo > hi {
                return Err(TensorError::InvalidCsr("offsets not monotone"));
            }
            let row = &indices[lo..hi];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(TensorError::InvalidCsr(
                    "column indices not strictly increasing",
                ));
            }
            if row.last().is_some_and(|&c| c >= cols) {
                return Err(TensorError::InvalidCsr("column index out of range"));
            }
        }
        Ok(Self {
            rows,
            cols,
            offsets,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            offsets: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Keeps every entry of `dense` that is not exactly zero.
    pub fn from_dense(dense: &DenseMatrix) -> Self {
        let mut offsets = Vec::with_capacity(dense.rows() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for r in 0..dense.rows() {
            for (c, &v) in dense.row(r).iter().enumerate() {
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            offsets.push(indices.len());
        }
        Self {
            rows: dense.rows(),
            cols: dense.cols(),
            offsets,
            indices,
            values,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                out.set(r, c, v);
            }
        }
        out
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_indices(&self, r: usize) -> &[usize] {
        &self.indices[self.offsets[r]..self.offsets[r + 1]]
    }

    pub fn row_values(&self, r: usize) -> &[f64] {
        &self.values[self.offsets[r]..self.offsets[r + 1]]
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row_indices(r)
            .iter()
            .copied()
            .zip(self.row_values(r).iter().copied())
    }

    /// Entry lookup by binary search within the row.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let idx = self.row_indices(r);
        match idx.binary_search(&c) {
            Ok(p) => self.row_values(r)[p],
            Err(_) => 0.0,
        }
    }

    /// Sparse × dense product.
    pub fn spmm(&self, b: &DenseMatrix) -> Result<DenseMatrix, TensorError> {
        if self.cols != b.rows() {
            return Err(TensorError::shape(
                "spmm",
                (self.rows, self.cols),
                b.shape(),
            ));
        }
        let width = b.cols();
        let mut out = DenseMatrix::zeros(self.rows, width);
        if width == 0 {
            return Ok(out);
        }
        let kernel = |(r, out_row): (usize, &mut [f64])| {
            for (c, v) in self.row(r) {
                for (o, &x) in out_row.iter_mut().zip(b.row(c)) {
                    *o += v * x;
                }
            }
        };
        if self.nnz() * width >= PAR_MIN_WORK {
            out.as_mut_slice()
                .par_chunks_mut(width)
                .enumerate()
                .for_each(kernel);
        } else {
            out.as_mut_slice()
                .chunks_mut(width)
                .enumerate()
                .for_each(kernel);
        }
        Ok(out)
    }

    /// `selfᵀ · b`, used for the backward pass of a non-symmetric `spmm`.
    pub fn t_spmm(&self, b: &DenseMatrix) -> Result<DenseMatrix, TensorError> {
        if self.rows != b.rows() {
            return Err(TensorError::shape(
                "t_spmm",
                (self.rows, self.cols),
                b.shape(),
            ));
        }
        let width = b.cols();
        let mut out = DenseMatrix::zeros(self.cols, width);
        for r in 0..self.rows {
            let b_row = b.row(r);
            for (c, v) in self.row(r) {
                for (o, &x) in out.row_mut(c).iter_mut().zip(b_row) {
                    *o += v * x;
                }
            }
        }
        Ok(out)
    }

    pub fn is_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        (0..self.rows).all(|r| self.row(r).all(|(c, v)| self.get(c, r) == v))
    }
}

pub fn spmm(a: &SparseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, TensorError> {
    a.spmm(b)
}
