//! Per-type linear feature fusion.
//!
//! Each node type `o` owns a trainable `F_o × F'` matrix `M_o`. The raw block `X_o`
//! is projected to `X_o · M_o` and the projected rows are put back at their nodes'
//! global positions, giving one `n × F'` matrix for the whole graph.

use rand::distributions::{Distribution, Uniform};
use rand::Rng;

use crate::graph::HeteroGraph;
use crate::rng::{stream_rng, Stream};
use crate::tensor::{DenseMatrix, Tape, TensorError, Var};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("type `{node_type}`: raw features have {found} columns but the transform has {expected} rows")]
    Dimension {
        node_type: String,
        expected: usize,
        found: usize,
    },
    #[error("graph has {graph} node types but {transforms} transforms were given")]
    TypeCount { graph: usize, transforms: usize },
    #[error("transforms disagree on the fused width: {0} vs {1}")]
    Width(usize, usize),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Samples an `rows × cols` matrix uniformly on `±sqrt(6 / (rows + cols))`.
pub fn glorot_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    let bound = (6.0 / (rows + cols).max(1) as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound);
    let data = (0..rows * cols).map(|_| dist.sample(rng)).collect();
    DenseMatrix::from_vec(rows, cols, data).expect("length matches shape")
}

/// The type-specific transforms `M_o`, indexed by node type.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeTransforms {
    mats: Vec<DenseMatrix>,
    width: usize,
}

impl TypeTransforms {
    pub fn new(mats: Vec<DenseMatrix>) -> Result<Self, FeatureError> {
        let width = mats.first().map_or(0, DenseMatrix::cols);
        if let Some(m) = mats.iter().find(|m| m.cols() != width) {
            return Err(FeatureError::Width(width, m.cols()));
        }
        Ok(Self { mats, width })
    }

    /// Shared output width `F'`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn get(&self, t: usize) -> &DenseMatrix {
        &self.mats[t]
    }

    pub fn matrices(&self) -> &[DenseMatrix] {
        &self.mats
    }

    pub fn matrices_mut(&mut self) -> &mut [DenseMatrix] {
        &mut self.mats
    }

    fn check(&self, g: &HeteroGraph) -> Result<(), FeatureError> {
        if self.mats.len() != g.types().len() {
            return Err(FeatureError::TypeCount {
                graph: g.types().len(),
                transforms: self.mats.len(),
            });
        }
        for (t, m) in self.mats.iter().enumerate() {
            let found = g.block(t).features.cols();
            if m.rows() != found {
                return Err(FeatureError::Dimension {
                    node_type: g.type_name(t).to_string(),
                    expected: m.rows(),
                    found,
                });
            }
        }
        Ok(())
    }
}

/// Glorot-uniform transforms for every node type of `g`, drawn from the init stream of `rng_seed`.
pub fn init_transforms(g: &HeteroGraph, f_prime: usize, rng_seed: u64) -> TypeTransforms {
    assert!(f_prime >= 1, "fused width must be positive");
    let mut rng = stream_rng(rng_seed, Stream::Init, 0);
    init_transforms_with(g, f_prime, &mut rng)
}

pub(crate) fn init_transforms_with<R: Rng + ?Sized>(
    g: &HeteroGraph,
    f_prime: usize,
    rng: &mut R,
) -> TypeTransforms {
    let mats = g
        .blocks()
        .iter()
        .map(|b| glorot_uniform(b.features.cols(), f_prime, rng))
        .collect();
    TypeTransforms {
        mats,
        width: f_prime,
    }
}

/// The fused `n × F'` feature matrix, rows in global node order.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedFeatures {
    pub matrix: DenseMatrix,
}

pub fn fuse(g: &HeteroGraph, m: &TypeTransforms) -> Result<FusedFeatures, FeatureError> {
    m.check(g)?;
    let mut out = DenseMatrix::zeros(g.node_count(), m.width());
    for (t, block) in g.blocks().iter().enumerate() {
        let projected = block.features.matmul(m.get(t))?;
        for (local, &node) in block.nodes.iter().enumerate() {
            out.row_mut(node).copy_from_slice(projected.row(local));
        }
    }
    Ok(FusedFeatures { matrix: out })
}

/// Records fusion on `tape`, with `params[t]` the tape variable holding `M_t`.
pub fn fuse_on_tape(
    tape: &mut Tape<'_>,
    g: &HeteroGraph,
    m: &TypeTransforms,
    params: &[Var],
) -> Result<Var, FeatureError> {
    m.check(g)?;
    let mut parts = Vec::with_capacity(params.len());
    for (t, block) in g.blocks().iter().enumerate() {
        if block.nodes.is_empty() {
            continue;
        }
        let x = tape.constant(block.features.clone());
        let xm = tape.matmul(x, params[t])?;
        parts.push((xm, block.nodes.clone()));
    }
    Ok(tape.stack_rows(g.node_count(), parts)?)
}
