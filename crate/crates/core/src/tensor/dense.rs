use rayon::prelude::*;

use super::{TensorError, PAR_MIN_WORK};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, TensorError> {
        if data.len() != rows * cols {
            return Err(TensorError::BufferLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. All rows must have the same width.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, TensorError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(TensorError::Ragged {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// `self · rhs`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, TensorError> {
        if self.cols != rhs.rows {
            return Err(TensorError::shape("matmul", self.shape(), rhs.shape()));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        let inner = self.cols;
        let kernel = |(r, out_row): (usize, &mut [f64])| {
            let lhs_row = &self.data[r * inner..(r + 1) * inner];
            for (k, &a) in lhs_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let rhs_row = rhs.row(k);
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        };
        if rhs.cols == 0 {
            return Ok(out);
        }
        if self.rows * inner * rhs.cols >= PAR_MIN_WORK {
            out.data
                .par_chunks_mut(rhs.cols)
                .enumerate()
                .for_each(kernel);
        } else {
            out.data.chunks_mut(rhs.cols).enumerate().for_each(kernel);
        }
        Ok(out)
    }

    /// `selfᵀ · rhs` without materializing the transpose.
    pub fn t_matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, TensorError> {
        if self.rows != rhs.rows {
            return Err(TensorError::shape("t_matmul", self.shape(), rhs.shape()));
        }
        let mut out = Self::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = rhs.row(k);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · rhsᵀ`.
    pub fn matmul_t(&self, rhs: &DenseMatrix) -> Result<DenseMatrix, TensorError> {
        if self.cols != rhs.cols {
            return Err(TensorError::shape("matmul_t", self.shape(), rhs.shape()));
        }
        let mut out = Self::zeros(self.rows, rhs.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..rhs.rows {
                let b = rhs.row(j);
                out.data[i * rhs.rows + j] = a.iter().zip(b).map(|(x, y)| x * y).sum();
            }
        }
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn relu(&self) -> DenseMatrix {
        self.map(|v| if v > 0.0 { v } else { 0.0 })
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax_rows(&self) -> DenseMatrix {
        let mut out = self.clone();
        for r in 0..self.rows {
            let row = out.row_mut(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &DenseMatrix) -> Result<(), TensorError> {
        if self.shape() != other.shape() {
            return Err(TensorError::shape("add", self.shape(), other.shape()));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn hadamard(&self, other: &DenseMatrix) -> Result<DenseMatrix, TensorError> {
        if self.shape() != other.shape() {
            return Err(TensorError::shape("hadamard", self.shape(), other.shape()));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        self.map(|v| v * s)
    }

    /// Index of the largest entry in row `r`; ties resolve to the lowest index.
    pub fn argmax_row(&self, r: usize) -> usize {
        let row = self.row(r);
        let mut best = 0;
        for (i, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = i;
            }
        }
        best
    }

    pub fn select_rows(&self, idx: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn relu(a: &DenseMatrix) -> DenseMatrix {
    a.relu()
}

pub fn softmax_rows(a: &DenseMatrix) -> DenseMatrix {
    a.softmax_rows()
}

pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, TensorError> {
    a.matmul(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_clamps_negatives() {
        let a = DenseMatrix::from_rows(&[[-1.0, 2.0]]).unwrap();
        assert_eq!(a.relu().as_slice(), &[0.0, 2.0]);
    }

    #[test]
    fn softmax_constant_row_is_uniform() {
        let a = DenseMatrix::filled(1, 5, 3.7);
        let s = a.softmax_rows();
        for &v in s.as_slice() {
            assert!((v - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_large_logits_stay_finite() {
        let a = DenseMatrix::from_rows(&[[1000.0, 1001.0]]).unwrap();
        let s = a.softmax_rows();
        assert!(s.is_finite());
        // shifted evaluation: [0, 1]
        let e1 = 1.0f64.exp();
        let expected = [1.0 / (1.0 + e1), e1 / (1.0 + e1)];
        assert!((s.get(0, 0) - expected[0]).abs() < 1e-15);
        assert!((s.get(0, 1) - expected[1]).abs() < 1e-15);
        assert!((s.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matmul_shape_mismatch_is_error() {
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 3);
        assert!(a.matmul(&b).is_err());
    }

    #[test]
    fn transposed_products_agree_with_explicit_transpose() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, -1.0], [0.5, 4.0]]).unwrap();
        let b =
            DenseMatrix::from_rows(&[[2.0, 0.0, 1.0], [1.0, 1.0, -2.0], [0.0, 3.0, 1.0]]).unwrap();
        let direct = a.t_matmul(&b).unwrap();
        let explicit = a.transpose().matmul(&b).unwrap();
        assert_eq!(direct, explicit);
        let c = DenseMatrix::from_rows(&[[1.0, 1.0], [2.0, -3.0]]).unwrap();
        assert_eq!(a.matmul_t(&c).unwrap(), a.matmul(&c.transpose()).unwrap());
    }

    #[test]
    fn argmax_breaks_ties_low() {
        let a = DenseMatrix::from_rows(&[[0.5, 0.5], [0.1, 0.9]]).unwrap();
        assert_eq!(a.argmax_row(0), 0);
        assert_eq!(a.argmax_row(1), 1);
    }
}
