//! Closed reverse-mode tape for the operation set of a graph-convolution stack.
//!
//! Only the ops the model needs are recorded: dense products, constant sparse
//! products, ReLU, constant elementwise masks (dropout) and row stacking (feature
//! fusion). That makes every backward rule small enough to check one by one
//! against finite differences.

use super::{DenseMatrix, SparseMatrix, TensorError};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<'a> {
    Leaf,
    Matmul(Var, Var),
    Spmm(&'a SparseMatrix, Var),
    Relu(Var),
    Mask(Var, DenseMatrix),
    StackRows(Vec<(Var, Vec<usize>)>),
}

struct Node<'a> {
    value: DenseMatrix,
    op: Op<'a>,
    requires_grad: bool,
}

/// A forward-pass recording. Sparse operands are borrowed and never receive gradients.
#[derive(Default)]
pub struct Tape<'a> {
    nodes: Vec<Node<'a>>,
}

/// Gradients indexed by [`Var`]. Entries that do not depend on a trainable leaf are `None`.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<DenseMatrix>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&DenseMatrix> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<DenseMatrix> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

impl<'a> Tape<'a> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: DenseMatrix, op: Op<'a>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn node(&self, v: Var) -> Result<&Node<'a>, TensorError> {
        self.nodes.get(v.0).ok_or(TensorError::UnknownVar(v.0))
    }

    /// Records a trainable leaf (a parameter).
    pub fn param(&mut self, value: DenseMatrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Records a constant leaf.
    pub fn constant(&mut self, value: DenseMatrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &DenseMatrix {
        &self.nodes[v.0].value
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (na, nb) = (self.node(a)?, self.node(b)?);
        let value = na.value.matmul(&nb.value)?;
        let rg = na.requires_grad || nb.requires_grad;
        Ok(self.push(value, Op::Matmul(a, b), rg))
    }

    pub fn spmm(&mut self, adj: &'a SparseMatrix, x: Var) -> Result<Var, TensorError> {
        let nx = self.node(x)?;
        let value = adj.spmm(&nx.value)?;
        let rg = nx.requires_grad;
        Ok(self.push(value, Op::Spmm(adj, x), rg))
    }

    pub fn relu(&mut self, x: Var) -> Result<Var, TensorError> {
        let nx = self.node(x)?;
        let value = nx.value.relu();
        let rg = nx.requires_grad;
        Ok(self.push(value, Op::Relu(x), rg))
    }

    /// Elementwise product with a constant mask (inverted dropout uses `0` or `1/(1-rate)`).
    pub fn mask(&mut self, x: Var, mask: DenseMatrix) -> Result<Var, TensorError> {
        let nx = self.node(x)?;
        let value = nx.value.hadamard(&mask)?;
        let rg = nx.requires_grad;
        Ok(self.push(value, Op::Mask(x, mask), rg))
    }

    /// Places the rows of each part at the given output rows. Every output row must be
    /// covered exactly once and all parts must share the column count.
    pub fn stack_rows(
        &mut self,
        rows: usize,
        parts: Vec<(Var, Vec<usize>)>,
    ) -> Result<Var, TensorError> {
        let cols = match parts.first() {
            Some((v, _)) => self.node(*v)?.value.cols(),
            None => 0,
        };
        let mut out = DenseMatrix::zeros(rows, cols);
        let mut seen = vec![false; rows];
        let mut rg = false;
        for (v, target_rows) in &parts {
            let node = self.node(*v)?;
            if node.value.cols() != cols || node.value.rows() != target_rows.len() {
                return Err(TensorError::shape(
                    "stack_rows",
                    (target_rows.len(), cols),
                    node.value.shape(),
                ));
            }
            for (src, &dst) in target_rows.iter().enumerate() {
                if dst >= rows || seen[dst] {
                    return Err(TensorError::StackCoverage(dst));
                }
                seen[dst] = true;
                out.row_mut(dst).copy_from_slice(node.value.row(src));
            }
            rg |= node.requires_grad;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(TensorError::StackCoverage(missing));
        }
        Ok(self.push(out, Op::StackRows(parts), rg))
    }

    /// Propagates `upstream` (d loss / d output) back to every recorded value.
    pub fn backward(&self, output: Var, upstream: &DenseMatrix) -> Result<Gradients, TensorError> {
        let out_node = self.node(output)?;
        if out_node.value.shape() != upstream.shape() {
            return Err(TensorError::shape(
                "backward",
                out_node.value.shape(),
                upstream.shape(),
            ));
        }
        let mut grads: Vec<Option<DenseMatrix>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(upstream.clone());

        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                grads[idx] = Some(g);
                continue;
            }
            match &node.op {
                Op::Leaf => {}
                Op::Matmul(a, b) => {
                    let (va, vb) = (&self.nodes[a.0], &self.nodes[b.0]);
                    if va.requires_grad {
                        accumulate(&mut grads, *a, g.matmul_t(&vb.value)?)?;
                    }
                    if vb.requires_grad {
                        accumulate(&mut grads, *b, va.value.t_matmul(&g)?)?;
                    }
                }
                Op::Spmm(adj, x) => {
                    accumulate(&mut grads, *x, adj.t_spmm(&g)?)?;
                }
                Op::Relu(x) => {
                    let pre = &self.nodes[x.0].value;
                    let mut dx = g.clone();
                    for (d, &p) in dx.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                        if p <= 0.0 {
                            *d = 0.0;
                        }
                    }
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::Mask(x, mask) => {
                    accumulate(&mut grads, *x, g.hadamard(mask)?)?;
                }
                Op::StackRows(parts) => {
                    for (v, rows) in parts {
                        if self.nodes[v.0].requires_grad {
                            accumulate(&mut grads, *v, g.select_rows(rows))?;
                        }
                    }
                }
            }
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }
}

fn accumulate(
    grads: &mut [Option<DenseMatrix>],
    v: Var,
    g: DenseMatrix,
) -> Result<(), TensorError> {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => {
            *slot = Some(g);
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_weight_gradient_is_xt_g() {
        let x = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [-1.0, 0.5]]).unwrap();
        let w = DenseMatrix::from_rows(&[[0.1, -0.2, 0.3], [0.4, 0.5, -0.6]]).unwrap();
        let g =
            DenseMatrix::from_rows(&[[1.0, 0.0, 2.0], [0.5, -1.0, 1.0], [0.0, 3.0, -1.0]]).unwrap();
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone());
        let wv = tape.param(w);
        let y = tape.matmul(xv, wv).unwrap();
        let grads = tape.backward(y, &g).unwrap();
        assert_eq!(grads.get(wv).unwrap(), &x.t_matmul(&g).unwrap());
    }

    #[test]
    fn relu_backward_zeroes_non_positive_preactivations() {
        let x = DenseMatrix::from_rows(&[[-1.0, 0.0, 2.0]]).unwrap();
        let mut tape = Tape::new();
        let xv = tape.param(x);
        let y = tape.relu(xv).unwrap();
        let grads = tape
            .backward(y, &DenseMatrix::from_rows(&[[5.0, 6.0, 7.0]]).unwrap())
            .unwrap();
        assert_eq!(grads.get(xv).unwrap().as_slice(), &[0.0, 0.0, 7.0]);
    }

    #[test]
    fn upstream_shape_must_match() {
        let mut tape = Tape::new();
        let xv = tape.param(DenseMatrix::zeros(2, 2));
        assert!(tape.backward(xv, &DenseMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn stack_rows_requires_full_coverage() {
        let mut tape = Tape::new();
        let a = tape.param(DenseMatrix::zeros(1, 2));
        assert!(matches!(
            tape.stack_rows(2, vec![(a, vec![1])]),
            Err(TensorError::StackCoverage(0))
        ));
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut tape = Tape::new();
        let c = tape.constant(DenseMatrix::identity(2));
        let w = tape.param(DenseMatrix::identity(2));
        let y = tape.matmul(c, w).unwrap();
        let grads = tape.backward(y, &DenseMatrix::identity(2)).unwrap();
        assert!(grads.get(w).is_some());
        assert!(grads.get(c).is_none());
    }
}
