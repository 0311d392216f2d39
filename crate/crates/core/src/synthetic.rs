//! Seeded heterogeneous graphs with planted class structure, plus the small
//! author/paper/conference example used in the docs and tests.
//!
//! Target nodes carry Gaussian features whose class means differ only slightly.
//! The reliable class signal lives in the graph:
//!
//! * [`planted_partition`]: targets link to shared attribute nodes drawn mostly
//!   from their own class pool, so same-class targets are two hops apart.
//! * [`relay_graph`]: each target hangs off a private relay node and relays attach
//!   to class pools. Each pool owns a few signal nodes with informative features,
//!   three hops from its targets. All pools meet at one hub, so large strata mix
//!   the signal nodes of every class.
//!
//! Other node types get a constant feature so their identity carries no label information.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::graph::{GraphBuilder, HeteroGraph, Split};
use crate::rng::{stream_rng, Stream};

/// Sizes shared by both generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub targets: usize,
    pub classes: usize,
    pub feature_dim: usize,
    /// Per-dimension offset of the class means.
    pub signal: f64,
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for TargetSpec {
    fn default() -> Self {
        Self {
            targets: 200,
            classes: 2,
            feature_dim: 16,
            signal: 0.2,
            train: 60,
            val: 40,
            test: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub targets: TargetSpec,
    pub attributes_per_class: usize,
    pub links_per_target: usize,
    /// Probability that a link goes to another class's pool.
    pub cross_prob: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            targets: TargetSpec::default(),
            attributes_per_class: 10,
            links_per_target: 5,
            cross_prob: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayConfig {
    pub targets: TargetSpec,
    pub pools_per_class: usize,
    pub signal_nodes_per_pool: usize,
    /// Per-dimension offset of the signal-node class means.
    pub signal_strength: f64,
    /// Probability that a relay attaches to a pool of another class.
    pub cross_prob: f64,
    pub seed: u64,
}

impl Default for RelayConfig {
    fn default() -> Self {
        Self {
            targets: TargetSpec {
                signal: 0.05,
                ..TargetSpec::default()
            },
            pools_per_class: 10,
            signal_nodes_per_pool: 10,
            signal_strength: 1.0,
            cross_prob: 0.05,
            seed: 0,
        }
    }
}

fn class_name(c: usize) -> String {
    format!("c{c}")
}

/// Class means are `±signal` per dimension, following a fixed sign pattern per class.
fn class_features<R: Rng>(dim: usize, signal: f64, class: usize, rng: &mut R) -> Vec<f64> {
    (0..dim)
        .map(|d| {
            let sign = if (d + class).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            let noise: f64 = StandardNormal.sample(rng);
            sign * signal + noise
        })
        .collect()
}

/// Adds the targets with labels and features; returns their ids and classes.
fn add_targets<R: Rng>(
    b: &mut GraphBuilder,
    spec: &TargetSpec,
    rng: &mut R,
) -> Vec<(String, usize)> {
    assert!(spec.classes >= 1 && spec.targets >= spec.classes);
    assert!(
        spec.train + spec.val + spec.test <= spec.targets,
        "split sizes exceed the number of targets"
    );
    let mut out = Vec::with_capacity(spec.targets);
    for i in 0..spec.targets {
        let class = i % spec.classes;
        let id = format!("t{i}");
        b.add_node(
            &id,
            "target",
            Some(class_features(spec.feature_dim, spec.signal, class, rng)),
        )
        .expect("fresh id");
        b.set_label(&id, &class_name(class)).expect("target type");
        out.push((id, class));
    }
    out
}

fn assign_splits<R: Rng>(
    b: &mut GraphBuilder,
    spec: &TargetSpec,
    targets: &[(String, usize)],
    rng: &mut R,
) {
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.shuffle(rng);
    let plan = [
        (Split::Train, spec.train),
        (Split::Val, spec.val),
        (Split::Test, spec.test),
    ];
    let mut it = order.into_iter();
    for (split, count) in plan {
        for idx in it.by_ref().take(count) {
            b.set_split(&targets[idx].0, split)
                .expect("labeled, unassigned");
        }
    }
}

fn pick_class<R: Rng>(own: usize, classes: usize, cross_prob: f64, rng: &mut R) -> usize {
    if classes > 1 && rng.gen::<f64>() < cross_prob {
        let other = rng.gen_range(0..classes - 1);
        if other >= own {
            other + 1
        } else {
            other
        }
    } else {
        own
    }
}

/// Targets linked to attribute nodes from mostly their own class pool.
pub fn planted_partition(cfg: &PlantedConfig) -> HeteroGraph {
    let spec = &cfg.targets;
    assert!(cfg.links_per_target <= cfg.attributes_per_class * spec.classes);
    let mut rng = stream_rng(cfg.seed, Stream::Synthetic, 0);
    let mut b = GraphBuilder::new();
    let targets = add_targets(&mut b, spec, &mut rng);
    let attr = |c: usize, j: usize| format!("a{c}_{j}");
    for c in 0..spec.classes {
        for j in 0..cfg.attributes_per_class {
            b.add_node(&attr(c, j), "attribute", Some(vec![1.0]))
                .expect("fresh id");
        }
    }
    for (id, class) in &targets {
        let mut linked = 0;
        while linked < cfg.links_per_target {
            let c = pick_class(*class, spec.classes, cfg.cross_prob, &mut rng);
            let j = rng.gen_range(0..cfg.attributes_per_class);
            if b.add_edge(id, &attr(c, j), None).expect("known ids") {
                linked += 1;
            }
        }
    }
    assign_splits(&mut b, spec, &targets, &mut rng);
    b.build().expect("generator keeps every invariant")
}

/// Target → private relay → class pool, with signal nodes on every pool and
/// every pool attached to a shared hub.
pub fn relay_graph(cfg: &RelayConfig) -> HeteroGraph {
    let spec = &cfg.targets;
    assert!(cfg.pools_per_class >= 1);
    let mut rng = stream_rng(cfg.seed, Stream::Synthetic, 1);
    let mut b = GraphBuilder::new();
    let targets = add_targets(&mut b, spec, &mut rng);
    let pool = |c: usize, j: usize| format!("p{c}_{j}");
    b.add_node("hub", "hub", Some(vec![1.0])).expect("fresh id");
    for c in 0..spec.classes {
        for j in 0..cfg.pools_per_class {
            b.add_node(&pool(c, j), "pool", Some(vec![1.0]))
                .expect("fresh id");
            for s in 0..cfg.signal_nodes_per_pool {
                let id = format!("s{c}_{j}_{s}");
                let feats = class_features(spec.feature_dim, cfg.signal_strength, c, &mut rng);
                b.add_node(&id, "signal", Some(feats)).expect("fresh id");
                b.add_edge(&id, &pool(c, j), None).expect("known ids");
            }
            b.add_edge(&pool(c, j), "hub", None).expect("known ids");
        }
    }
    let mut per_class = vec![0usize; spec.classes];
    for (i, (id, class)) in targets.iter().enumerate() {
        let relay = format!("r{i}");
        b.add_node(&relay, "relay", Some(vec![1.0]))
            .expect("fresh id");
        b.add_edge(id, &relay, None).expect("known ids");
        let c = pick_class(*class, spec.classes, cfg.cross_prob, &mut rng);
        // round-robin keeps pool sizes balanced, so degrees leak no class information
        let j = per_class[c] % cfg.pools_per_class;
        per_class[c] += 1;
        b.add_edge(&relay, &pool(c, j), None).expect("known ids");
    }
    assign_splits(&mut b, spec, &targets, &mut rng);
    b.build().expect("generator keeps every invariant")
}

/// Four authors, five papers and two conferences. Authors carry two features,
/// papers three, conferences none.
pub fn toy_graph() -> HeteroGraph {
    let mut b = GraphBuilder::new();
    for (i, id) in ["A1", "A2", "A3", "A4"].iter().enumerate() {
        b.add_node(id, "author", Some(vec![1.0, i as f64]))
            .expect("fresh id");
    }
    for (i, id) in ["P1", "P2", "P3", "P4", "P5"].iter().enumerate() {
        b.add_node(id, "paper", Some(vec![i as f64, 1.0, -(i as f64)]))
            .expect("fresh id");
    }
    b.add_node("C1", "conference", None).expect("fresh id");
    b.add_node("C2", "conference", None).expect("fresh id");
    let edges = [
        ("A1", "P1"),
        ("A1", "P2"),
        ("A1", "P3"),
        ("A1", "P4"),
        ("A1", "P5"),
        ("A2", "P1"),
        ("A3", "P2"),
        ("A4", "P3"),
        ("A4", "P4"),
        ("A4", "P5"),
        ("P1", "C2"),
        ("P2", "C2"),
        ("P3", "C1"),
        ("P4", "C1"),
        ("P5", "C1"),
    ];
    for (s, d) in edges {
        b.add_edge(s, d, None).expect("known ids");
    }
    b.build().expect("fixture is valid")
}
