//! Reference implementations the library is checked against. Each one is the
//! slow, obvious version of its counterpart and shares no code with it.
#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};

use hcn::graph::{GraphBuilder, HeteroGraph, Split};
use hcn::tensor::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random graph with `2..=4` node types, `n <= max_n` nodes and edge density
/// between 1% and 10% of all pairs.
pub fn random_graph(seed: u64, max_n: usize) -> HeteroGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_n);
    let types = rng.gen_range(2..=4);
    let density = rng.gen_range(0.01..=0.10);
    let mut b = GraphBuilder::new();
    let widths: Vec<Option<usize>> = (0..types)
        .map(|_| {
            if rng.gen_bool(0.3) {
                None
            } else {
                Some(rng.gen_range(1..=4))
            }
        })
        .collect();
    for i in 0..n {
        let t = rng.gen_range(0..types);
        let feats = widths[t].map(|w| (0..w).map(|_| rng.gen_range(-1.0..1.0)).collect());
        b.add_node(&format!("n{i}"), &format!("type{t}"), feats)
            .unwrap();
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                b.add_edge(&format!("n{i}"), &format!("n{j}"), None)
                    .unwrap();
            }
        }
    }
    b.build().unwrap()
}

pub fn adjacency_lists(g: &HeteroGraph) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); g.node_count()];
    for e in g.edges() {
        adj[e.a].push(e.b);
        adj[e.b].push(e.a);
    }
    adj
}

/// Hop distances by breadth-first search from every node; `usize::MAX` if unreachable.
pub fn all_pairs_bfs(g: &HeteroGraph) -> Vec<Vec<usize>> {
    let adj = adjacency_lists(g);
    let n = g.node_count();
    (0..n)
        .map(|s| {
            let mut d = vec![usize::MAX; n];
            d[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &v in &adj[u] {
                    if d[v] == usize::MAX {
                        d[v] = d[u] + 1;
                        q.push_back(v);
                    }
                }
            }
            d
        })
        .collect()
}

/// Indicator of distance `<= k`.
pub fn distance_indicator(g: &HeteroGraph, k: usize) -> Vec<Vec<bool>> {
    all_pairs_bfs(g)
        .into_iter()
        .map(|row| row.into_iter().map(|d| d <= k).collect())
        .collect()
}

/// Nonzero patterns of `(I + A)^1 … (I + A)^k_max` by repeated boolean products.
pub fn boolean_powers(g: &HeteroGraph, k_max: usize) -> Vec<Vec<Vec<bool>>> {
    let n = g.node_count();
    let mut base = adjacency_lists(g);
    for (i, row) in base.iter_mut().enumerate() {
        row.push(i);
    }
    let mut acc = vec![vec![false; n]; n];
    for (i, row) in base.iter().enumerate() {
        for &j in row {
            acc[i][j] = true;
        }
    }
    let mut out = vec![acc.clone()];
    for _ in 1..k_max {
        let mut next = vec![vec![false; n]; n];
        for i in 0..n {
            for l in 0..n {
                if acc[i][l] {
                    for &j in &base[l] {
                        next[i][j] = true;
                    }
                }
            }
        }
        acc = next;
        out.push(acc.clone());
    }
    out
}

/// `a_ij / sqrt(d_i d_j)` with row sums as degrees, entry by entry.
pub fn dense_normalize(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let d: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = a[i][j] / (d[i] * d[j]).sqrt();
        }
    }
    out
}

/// Largest absolute eigenvalue estimate of a symmetric matrix by power iteration.
pub fn spectral_radius(a: &[Vec<f64>], iterations: usize, seed: u64) -> f64 {
    let n = a.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let w: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| a[i][j] * v[j]).sum())
            .collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        estimate = norm / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.into_iter().map(|x| x / norm).collect();
    }
    estimate
}

/// Central difference of `f` in every entry of `x`.
pub fn finite_difference(
    x: &DenseMatrix,
    eps: f64,
    mut f: impl FnMut(&DenseMatrix) -> f64,
) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(x.rows(), x.cols());
    let mut probe = x.clone();
    for r in 0..x.rows() {
        for c in 0..x.cols() {
            let v = x.get(r, c);
            probe.set(r, c, v + eps);
            let plus = f(&probe);
            probe.set(r, c, v - eps);
            let minus = f(&probe);
            probe.set(r, c, v);
            out.set(r, c, (plus - minus) / (2.0 * eps));
        }
    }
    out
}

/// Micro- and Macro-F1 from explicit per-class counting.
pub fn f1_oracle(pred: &[usize], truth: &[usize]) -> (f64, f64) {
    let mut classes: Vec<usize> = pred.iter().chain(truth).copied().collect();
    classes.sort_unstable();
    classes.dedup();
    let mut per_class = Vec::new();
    let (mut tp_all, mut fp_all, mut fn_all) = (0.0, 0.0, 0.0);
    for &c in &classes {
        let mut tp = 0.0;
        let mut fp = 0.0;
        let mut fn_ = 0.0;
        for i in 0..pred.len() {
            match (pred[i] == c, truth[i] == c) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fn_ += 1.0,
                _ => {}
            }
        }
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.push(f1);
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
    }
    let p = tp_all / (tp_all + fp_all);
    let r = tp_all / (tp_all + fn_all);
    let micro = if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    };
    let macro_ = per_class.iter().sum::<f64>() / per_class.len() as f64;
    (micro, macro_)
}

/// NMI (arithmetic-mean normalization) from joint and marginal counts.
pub fn nmi_oracle(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let mut joint: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut pa: BTreeMap<usize, f64> = BTreeMap::new();
    let mut pb: BTreeMap<usize, f64> = BTreeMap::new();
    for i in 0..a.len() {
        *joint.entry((a[i], b[i])).or_default() += 1.0;
        *pa.entry(a[i]).or_default() += 1.0;
        *pb.entry(b[i]).or_default() += 1.0;
    }
    let h = |m: &BTreeMap<usize, f64>| -> f64 { m.values().map(|c| -(c / n) * (c / n).ln()).sum() };
    let (ha, hb) = (h(&pa), h(&pb));
    if ha == 0.0 && hb == 0.0 {
        return 1.0;
    }
    let mi: f64 = joint
        .iter()
        .map(|(&(x, y), &c)| c / n * (c * n / (pa[&x] * pb[&y])).ln())
        .sum();
    mi / ((ha + hb) / 2.0)
}

/// ARI by enumerating every unordered node pair.
pub fn ari_oracle(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut both, mut only_a, mut only_b, mut pairs) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let sa = a[i] == a[j];
            let sb = b[i] == b[j];
            pairs += 1.0;
            if sa && sb {
                both += 1.0;
            }
            if sa {
                only_a += 1.0;
            }
            if sb {
                only_b += 1.0;
            }
        }
    }
    if pairs == 0.0 {
        return 1.0;
    }
    let expected = only_a * only_b / pairs;
    let max = (only_a + only_b) / 2.0;
    if max == expected {
        return 1.0;
    }
    (both - expected) / (max - expected)
}

/// Two node types, two classes on the four `P` nodes, every split non-empty.
pub fn gradient_fixture() -> HeteroGraph {
    let mut b = GraphBuilder::new();
    b.add_node("p0", "P", Some(vec![0.3, -1.2, 0.8])).unwrap();
    b.add_node("p1", "P", Some(vec![-0.7, 0.4, 1.1])).unwrap();
    b.add_node("a0", "A", Some(vec![1.5, -0.2])).unwrap();
    b.add_node("p2", "P", Some(vec![0.9, 0.6, -0.5])).unwrap();
    b.add_node("a1", "A", Some(vec![-0.4, 0.9])).unwrap();
    b.add_node("p3", "P", Some(vec![-1.1, -0.3, 0.2])).unwrap();
    for (s, d) in [
        ("p0", "a0"),
        ("p1", "a0"),
        ("p2", "a1"),
        ("p3", "a1"),
        ("a0", "p2"),
    ] {
        b.add_edge(s, d, None).unwrap();
    }
    for (id, c) in [("p0", "x"), ("p1", "x"), ("p2", "y"), ("p3", "y")] {
        b.set_label(id, c).unwrap();
    }
    b.set_split("p0", Split::Train).unwrap();
    b.set_split("p2", Split::Train).unwrap();
    b.set_split("p3", Split::Train).unwrap();
    b.set_split("p1", Split::Test).unwrap();
    b.build().unwrap()
}

/// Random graph whose type `P` is labeled with up to three classes and split
/// at random, with every class present in training. Other types may be featureless.
pub fn labeled_graph(seed: u64, max_n: usize) -> HeteroGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets = rng.gen_range(4..=max_n.max(4));
    let others = rng.gen_range(1..=max_n.max(2));
    let classes = rng.gen_range(2..=3usize).min(targets / 2);
    let p_width = rng.gen_range(1..=4);
    let a_width = if rng.gen_bool(0.3) {
        None
    } else {
        Some(rng.gen_range(1..=3))
    };
    let mut b = GraphBuilder::new();
    let mut ids = Vec::new();
    for i in 0..targets {
        let feats = (0..p_width).map(|_| rng.gen_range(-1.0..1.0)).collect();
        b.add_node(&format!("p{i}"), "P", Some(feats)).unwrap();
        ids.push(format!("p{i}"));
    }
    for i in 0..others {
        let feats = a_width.map(|w| (0..w).map(|_| rng.gen_range(-1.0..1.0)).collect());
        b.add_node(&format!("a{i}"), "A", feats).unwrap();
        ids.push(format!("a{i}"));
    }
    let density = rng.gen_range(0.1..0.4);
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            if rng.gen_bool(density) {
                b.add_edge(&ids[i], &ids[j], None).unwrap();
            }
        }
    }
    for i in 0..targets {
        let id = format!("p{i}");
        b.set_label(&id, &format!("c{}", i % classes)).unwrap();
        let split = if i < classes {
            Split::Train
        } else {
            [Split::Train, Split::Val, Split::Test][rng.gen_range(0..3)]
        };
        b.set_split(&id, split).unwrap();
    }
    b.build().unwrap()
}
