use super::HeteroGraph;

/// Symmetric boolean `n × n` matrix with unit diagonal, stored as sorted CSR rows.
///
/// Entry `(i, j)` is set iff node `j` lies in the k-strata of node `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrataMatrix {
    order: usize,
    n: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
}

impl StrataMatrix {
    /// Builds a matrix from per-row column lists. Rows are sorted and deduplicated.
    pub fn from_rows(order: usize, rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        offsets.push(0);
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            indices.extend(row);
            offsets.push(indices.len());
        }
        Self {
            order,
            n,
            offsets,
            indices,
        }
    }

    /// Assembles from raw CSR arrays; caller guarantees sorted rows.
    pub(crate) fn from_csr(
        order: usize,
        n: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
    ) -> Self {
        Self {
            order,
            n,
            offsets,
            indices,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.indices[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.row(i).binary_search(&j).is_ok()
    }

    /// Number of set entries, diagonal included.
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Number of unordered off-diagonal pairs `{i, j}` that are set.
    pub fn pair_count(&self) -> usize {
        let diag = (0..self.n).filter(|&i| self.contains(i, i)).count();
        (self.nnz() - diag) / 2
    }

    /// Fraction of the `n²` cells that are set.
    pub fn density(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.nnz() as f64 / (self.n as f64 * self.n as f64)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).iter().all(|&j| self.contains(j, i)))
    }

    pub fn has_unit_diagonal(&self) -> bool {
        (0..self.n).all(|i| self.contains(i, i))
    }

    /// Elementwise `self ≤ other`.
    pub fn is_subset_of(&self, other: &StrataMatrix) -> bool {
        self.n == other.n && (0..self.n).all(|i| self.row(i).iter().all(|&j| other.contains(i, j)))
    }

    pub fn to_dense(&self) -> Vec<Vec<bool>> {
        let mut out = vec![vec![false; self.n]; self.n];
        for (i, row) in out.iter_mut().enumerate() {
            for &j in self.row(i) {
                row[j] = true;
            }
        }
        out
    }
}

/// The 1-stratum adjacency: `(i, j)` is set iff `i == j` or `{i, j}` is an edge.
pub fn base_adjacency(g: &HeteroGraph) -> StrataMatrix {
    let n = g.node_count();
    let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for e in g.edges() {
        rows[e.a].push(e.b);
        rows[e.b].push(e.a);
    }
    StrataMatrix::from_rows(1, rows)
}
