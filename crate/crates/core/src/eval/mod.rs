//! Classification and clustering metrics, K-means, and the sweep drivers.

mod kmeans;
mod report;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use kmeans::{kmeans, KMeansResult, KMeansRun, MAX_ITERATIONS};
pub use report::{
    classification_report, cluster_report, dilation_study, evaluate, sweep_k, write_dilation_csv,
    write_sweep_csv, ClassScore, ClassificationReport, ClusterReport, DilationRow, DilationStudy,
    MetricsReport, Scores, SweepRow, SWEEP_CSV_HEADER,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("cannot score an empty partition")]
    Empty,
    #[error("partitions cover {0} and {1} nodes")]
    Length(usize, usize),
    #[error("asked for {k} clusters from {rows} points")]
    TooManyClusters { k: usize, rows: usize },
    #[error("cluster count must be at least 1")]
    ZeroClusters,
    #[error("restart count must be at least 1")]
    ZeroRestarts,
    #[error("graph has no labeled target nodes to cluster")]
    NoLabeledNodes,
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

/// A class or cluster index per node of some node set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition(pub Vec<usize>);

impl Partition {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.0
    }

    /// Number of distinct labels in use.
    pub fn cluster_count(&self) -> usize {
        let mut v = self.0.clone();
        v.sort_unstable();
        v.dedup();
        v.len()
    }
}

impl From<Vec<usize>> for Partition {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

fn check_pair(a: &[usize], b: &[usize]) -> Result<(), EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::Length(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

/// Relabels to `0..r` in order of first appearance.
fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let out = labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    (out, map.len())
}

struct Contingency {
    n: f64,
    cells: Vec<Vec<f64>>,
    rows: Vec<f64>,
    cols: Vec<f64>,
}

fn contingency(a: &[usize], b: &[usize]) -> Contingency {
    let (a, ra) = compact(a);
    let (b, rb) = compact(b);
    let mut cells = vec![vec![0.0; rb]; ra];
    for (&i, &j) in a.iter().zip(&b) {
        cells[i][j] += 1.0;
    }
    let rows = cells.iter().map(|r| r.iter().sum()).collect();
    let cols = (0..rb).map(|j| cells.iter().map(|r| r[j]).sum()).collect();
    Contingency {
        n: a.len() as f64,
        cells,
        rows,
        cols,
    }
}

/// Per-class one-vs-rest counts `(tp, fp, fn)` for classes `0..=max label`.
pub(crate) fn confusion(pred: &[usize], truth: &[usize]) -> Vec<(usize, usize, usize)> {
    let classes = pred.iter().chain(truth).max().map_or(0, |m| m + 1);
    let mut counts = vec![(0, 0, 0); classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            counts[p].0 += 1;
        } else {
            counts[p].1 += 1;
            counts[t].2 += 1;
        }
    }
    counts
}

pub(crate) fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Micro-F1 over pooled counts and Macro-F1 over every class seen in either
/// partition. A class with no hits scores 0 in the macro mean.
pub fn micro_macro_f1(pred: &Partition, truth: &Partition) -> Result<(f64, f64), EvalError> {
    check_pair(&pred.0, &truth.0)?;
    let counts = confusion(&pred.0, &truth.0);
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    let mut sum = 0.0;
    let mut seen = 0;
    for &(t, p, f) in &counts {
        tp += t;
        fp += p;
        fn_ += f;
        if t + p + f > 0 {
            sum += f1(t, p, f);
            seen += 1;
        }
    }
    Ok((f1(tp, fp, fn_), sum / seen as f64))
}

/// Fraction of positions where the partitions agree.
pub fn accuracy(pred: &Partition, truth: &Partition) -> Result<f64, EvalError> {
    check_pair(&pred.0, &truth.0)?;
    let hits = pred.0.iter().zip(&truth.0).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

fn entropy(marginal: &[f64], n: f64) -> f64 {
    marginal
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| -(c / n) * (c / n).ln())
        .sum()
}

/// Mutual information over the arithmetic mean of the two entropies, natural log.
pub fn nmi(a: &Partition, b: &Partition) -> Result<f64, EvalError> {
    check_pair(&a.0, &b.0)?;
    let c = contingency(&a.0, &b.0);
    let ha = entropy(&c.rows, c.n);
    let hb = entropy(&c.cols, c.n);
    if ha == 0.0 && hb == 0.0 {
        // both are a single cluster over the same nodes, hence identical
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (i, row) in c.cells.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0.0 {
                mi += nij / c.n * (c.n * nij / (c.rows[i] * c.cols[j])).ln();
            }
        }
    }
    Ok((mi / ((ha + hb) / 2.0)).clamp(0.0, 1.0))
}

fn choose2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index from the contingency table. When the chance-corrected
/// denominator vanishes the partitions are identical and the score is 1.
pub fn ari(a: &Partition, b: &Partition) -> Result<f64, EvalError> {
    check_pair(&a.0, &b.0)?;
    let c = contingency(&a.0, &b.0);
    let index: f64 = c.cells.iter().flatten().map(|&x| choose2(x)).sum();
    let sa: f64 = c.rows.iter().map(|&x| choose2(x)).sum();
    let sb: f64 = c.cols.iter().map(|&x| choose2(x)).sum();
    let total = choose2(c.n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sa * sb / total;
    let max = (sa + sb) / 2.0;
    let denom = max - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}
