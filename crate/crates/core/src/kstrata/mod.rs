//! k-strata adjacency: every node within `k` hops, self included.
//!
//! [`expand_strata`] grows the 1-stratum matrix one hop per round. Each round,
//! every row unions the 1-hop neighborhoods of the nodes that joined it in the
//! previous round. Rows are independent and computed in parallel. The result is
//! identical for any thread count.
//!
//! [`bfs_distance`] works directly on the edge list and serves as the reference
//! the expansion is tested against.

mod cache;

use std::collections::VecDeque;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::graph::{HeteroGraph, StrataMatrix};
use crate::tensor::SparseMatrix;

pub use cache::{read_strata_cache, strata_from_bytes, strata_to_bytes, write_strata_cache};

#[derive(Debug, thiserror::Error)]
pub enum StrataError {
    #[error("strata order must be at least 1")]
    ZeroOrder,
    #[error("expansion needs a 1-stratum input, got order {0}")]
    NotBase(usize),
    #[error("dilation percentage {0} outside [0, 100)")]
    Percentage(f64),
    #[error("row {0} has zero degree; strata matrices must have a unit diagonal")]
    ZeroDegree(usize),
    #[error("strata cache: bad magic bytes")]
    BadMagic,
    #[error("strata cache: unsupported version {0}")]
    Version(u16),
    #[error("strata cache: truncated")]
    Truncated,
    #[error("strata cache: {0}")]
    Corrupt(&'static str),
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

/// Shortest-path hop count, or unreachable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Distance {
    Hops(usize),
    Unreachable,
}

impl Distance {
    pub fn within(self, k: usize) -> bool {
        matches!(self, Distance::Hops(d) if d <= k)
    }
}

/// Breadth-first hop distances from `source` to every node.
pub fn bfs_distance(g: &HeteroGraph, source: usize) -> Vec<Distance> {
    let n = g.node_count();
    assert!(source < n, "source {source} out of range for {n} nodes");
    let mut adj = vec![Vec::new(); n];
    for e in g.edges() {
        adj[e.a].push(e.b);
        adj[e.b].push(e.a);
    }
    let mut dist = vec![Distance::Unreachable; n];
    dist[source] = Distance::Hops(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let Distance::Hops(du) = dist[u] else {
            unreachable!()
        };
        for &v in &adj[u] {
            if dist[v] == Distance::Unreachable {
                dist[v] = Distance::Hops(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Computes the `k`-strata matrix from the 1-stratum matrix in `k - 1` rounds.
pub fn expand_strata(a1: &StrataMatrix, k: usize) -> Result<StrataMatrix, StrataError> {
    if k == 0 {
        return Err(StrataError::ZeroOrder);
    }
    if a1.order() != 1 {
        return Err(StrataError::NotBase(a1.order()));
    }
    if k == 1 {
        return Ok(a1.clone());
    }
    let n = a1.n();
    let rows: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![usize::MAX; n], Vec::new(), Vec::new()),
            |(mark, frontier, next), i| {
                let mut row = Vec::with_capacity(a1.degree(i));
                frontier.clear();
                for &j in a1.row(i) {
                    mark[j] = i;
                    row.push(j);
                    frontier.push(j);
                }
                for _ in 2..=k {
                    next.clear();
                    for &u in frontier.iter() {
                        for &v in a1.row(u) {
                            if mark[v] != i {
                                mark[v] = i;
                                next.push(v);
                            }
                        }
                    }
                    if next.is_empty() {
                        break;
                    }
                    row.extend_from_slice(next);
                    std::mem::swap(frontier, next);
                }
                row.sort_unstable();
                row
            },
        )
        .collect();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(rows.iter().map(Vec::len).sum());
    offsets.push(0);
    for r in rows {
        indices.extend(r);
        offsets.push(indices.len());
    }
    Ok(StrataMatrix::from_csr(k, n, offsets, indices))
}

/// Number of off-diagonal pairs `dilate` removes for `pairs` candidates at `p` percent.
pub fn dilation_drop_count(pairs: usize, p: f64) -> usize {
    ((p * pairs as f64) / 100.0).floor() as usize
}

/// Removes `⌊p% · pairs⌋` randomly chosen symmetric off-diagonal pairs.
///
/// The diagonal is never touched. The same seed always drops the same pairs.
pub fn dilate(ak: &StrataMatrix, p: f64, rng_seed: u64) -> Result<StrataMatrix, StrataError> {
    if !(0.0..100.0).contains(&p) {
        return Err(StrataError::Percentage(p));
    }
    let n = ak.n();
    let mut pairs = Vec::with_capacity(ak.pair_count());
    for i in 0..n {
        for &j in ak.row(i) {
            if j > i {
                pairs.push((i, j));
            }
        }
    }
    let drop = dilation_drop_count(pairs.len(), p);
    if drop == 0 {
        return Ok(ak.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut dropped = vec![false; pairs.len()];
    for idx in index::sample(&mut rng, pairs.len(), drop) {
        dropped[idx] = true;
    }
    let mut rows: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            if ak.contains(i, i) {
                vec![i]
            } else {
                Vec::new()
            }
        })
        .collect();
    for (&(i, j), &gone) in pairs.iter().zip(&dropped) {
        if !gone {
            rows[i].push(j);
            rows[j].push(i);
        }
    }
    Ok(StrataMatrix::from_rows(ak.order(), rows))
}

/// `D^{-1/2} Ã D^{-1/2}` with `d_i` the row sums of the strata matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    matrix: SparseMatrix,
}

impl NormalizedAdjacency {
    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }
}

pub fn normalize(ak: &StrataMatrix) -> Result<NormalizedAdjacency, StrataError> {
    let n = ak.n();
    let mut degree = Vec::with_capacity(n);
    for i in 0..n {
        let d = ak.degree(i);
        if d == 0 {
            return Err(StrataError::ZeroDegree(i));
        }
        degree.push(d as f64);
    }
    let mut values = Vec::with_capacity(ak.nnz());
    for i in 0..n {
        for &j in ak.row(i) {
            values.push(1.0 / (degree[i] * degree[j]).sqrt());
        }
    }
    let matrix = SparseMatrix::new(n, n, ak.offsets().to_vec(), ak.indices().to_vec(), values)
        .expect("strata rows are sorted CSR");
    Ok(NormalizedAdjacency { matrix })
}
