//! Numerical core: dense and CSR matrices, the masked softmax cross-entropy,
//! a closed reverse-mode tape and the Adam optimizer.
//!
//! All kernels are deterministic. Parallel kernels split work by output row and
//! each row is reduced in a fixed order, so results never depend on the thread count.

mod adam;
mod dense;
mod sparse;
mod tape;

pub use adam::{adam_step, AdamState};
pub use dense::{matmul, relu, softmax_rows, DenseMatrix};
pub use sparse::{spmm, SparseMatrix};
pub use tape::{Gradients, Tape, Var};

/// Work (multiply-adds) below which kernels stay on the calling thread.
pub(crate) const PAR_MIN_WORK: usize = 1 << 16;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum TensorError {
    #[error("{op}: incompatible shapes {lhs:?} and {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("buffer of length {len} cannot hold a {rows}x{cols} matrix")]
    BufferLength {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("ragged rows: expected width {expected}, found {found}")]
    Ragged { expected: usize, found: usize },
    #[error("invalid CSR structure: {0}")]
    InvalidCsr(&'static str),
    #[error("tape has no value with index {0}")]
    UnknownVar(usize),
    #[error("stacked rows do not cover output row {0} exactly once")]
    StackCoverage(usize),
    #[error("expected {expected} parameters, found {found}")]
    ParamCount { expected: usize, found: usize },
    #[error("loss mask is empty")]
    EmptyMask,
    #[error("node {node} has label {label} outside 0..{classes}")]
    LabelRange {
        node: usize,
        label: usize,
        classes: usize,
    },
}

impl TensorError {
    pub(crate) fn shape(op: &'static str, lhs: (usize, usize), rhs: (usize, usize)) -> Self {
        Self::Shape { op, lhs, rhs }
    }
}

/// Summed softmax cross-entropy over the masked rows of `logits`.
///
/// Returns the loss and its gradient with respect to `logits`; unmasked rows get
/// zero gradient. `labels[i]` is read only for `i` in `mask`.
pub fn masked_cross_entropy(
    logits: &DenseMatrix,
    labels: &[usize],
    mask: &[usize],
) -> Result<(f64, DenseMatrix), TensorError> {
    if mask.is_empty() {
        return Err(TensorError::EmptyMask);
    }
    let classes = logits.cols();
    let mut grad = DenseMatrix::zeros(logits.rows(), classes);
    let mut loss = 0.0;
    for &node in mask {
        let label = labels[node];
        if label >= classes {
            return Err(TensorError::LabelRange {
                node,
                label,
                classes,
            });
        }
        let row = logits.row(node);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|&z| (z - max).exp()).sum();
        let log_norm = max + sum.ln();
        loss += log_norm - row[label];
        let g = grad.row_mut(node);
        for (gc, &z) in g.iter_mut().zip(row) {
            *gc = (z - log_norm).exp();
        }
        g[label] -= 1.0;
    }
    Ok((loss, grad))
}
