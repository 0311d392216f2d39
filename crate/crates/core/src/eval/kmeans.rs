use rand::seq::index;

use super::{EvalError, Partition};
use crate::rng::{stream_rng, Stream};
use crate::tensor::DenseMatrix;

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansRun {
    pub partition: Partition,
    pub wcss: f64,
    pub iterations: usize,
    /// Within-cluster sum of squares after every update step.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Index into `runs` of the lowest-WCSS restart (earliest on ties).
    pub best: usize,
    pub runs: Vec<KMeansRun>,
}

impl KMeansResult {
    pub fn best_run(&self) -> &KMeansRun {
        &self.runs[self.best]
    }

    pub fn best_partition(&self) -> &Partition {
        &self.runs[self.best].partition
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &DenseMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = sq_dist(point, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Keeps the current cluster unless another centroid is strictly closer.
fn reassign(point: &[f64], centroids: &DenseMatrix, current: usize) -> usize {
    let mut best = (current, sq_dist(point, centroids.row(current)));
    for c in 0..centroids.rows() {
        let d = sq_dist(point, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best.0
}

fn wcss(points: &DenseMatrix, centroids: &DenseMatrix, assign: &[usize]) -> f64 {
    assign
        .iter()
        .enumerate()
        .map(|(i, &c)| sq_dist(points.row(i), centroids.row(c)))
        .sum()
}

fn update(points: &DenseMatrix, k: usize, assign: &mut [usize]) -> DenseMatrix {
    let d = points.cols();
    loop {
        let mut sums = DenseMatrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for (i, &c) in assign.iter().enumerate() {
            counts[c] += 1;
            for (s, v) in sums.row_mut(c).iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let inv = 1.0 / count as f64;
                sums.row_mut(c).iter_mut().for_each(|s| *s *= inv);
            }
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return sums;
        };
        // move the point farthest from its centroid into the empty cluster
        let far = (0..assign.len())
            .filter(|&i| counts[assign[i]] > 1)
            .max_by(|&i, &j| {
                let di = sq_dist(points.row(i), sums.row(assign[i]));
                let dj = sq_dist(points.row(j), sums.row(assign[j]));
                di.total_cmp(&dj).then(j.cmp(&i))
            })
            .expect("k <= rows leaves a cluster with two points");
        assign[far] = empty;
    }
}

fn single_run(points: &DenseMatrix, k: usize, seed: u64, restart: usize) -> KMeansRun {
    let n = points.rows();
    let mut rng = stream_rng(seed, Stream::KMeans, restart as u64);
    let init: Vec<usize> = index::sample(&mut rng, n, k).into_vec();
    let mut centroids = points.select_rows(&init);
    let mut assign: Vec<usize> = (0..n)
        .map(|i| nearest(points.row(i), &centroids).0)
        .collect();
    let mut trace = Vec::new();
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        centroids = update(points, k, &mut assign);
        trace.push(wcss(points, &centroids, &assign));
        let next: Vec<usize> = (0..n)
            .map(|i| reassign(points.row(i), &centroids, assign[i]))
            .collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    KMeansRun {
        wcss: wcss(points, &centroids, &assign),
        partition: Partition(assign),
        iterations,
        trace,
    }
}

/// Lloyd's algorithm from `restarts` independent uniform initializations of `k`
/// distinct rows. Each restart draws from its own derived seed.
pub fn kmeans(
    points: &DenseMatrix,
    k: usize,
    restarts: usize,
    rng_seed: u64,
) -> Result<KMeansResult, EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroClusters);
    }
    if restarts == 0 {
        return Err(EvalError::ZeroRestarts);
    }
    if k > points.rows() {
        return Err(EvalError::TooManyClusters {
            k,
            rows: points.rows(),
        });
    }
    let runs: Vec<KMeansRun> = (0..restarts)
        .map(|r| single_run(points, k, rng_seed, r))
        .collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.wcss < runs[best].wcss {
            best = i;
        }
    }
    Ok(KMeansResult { best, runs })
}
