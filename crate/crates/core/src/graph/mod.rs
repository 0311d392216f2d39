//! Typed graph model and TSV ingestion.
//!
//! A [`HeteroGraph`] has typed nodes, undirected untyped-for-the-algorithm edges
//! (edge type names are kept as annotations), one feature block per node type,
//! and labels plus train/val/test splits for a single target node type.

mod io;
mod strata;

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use crate::tensor::DenseMatrix;

pub use io::{load_graph, load_graph_with, write_graph, GraphPaths, LoadOptions};
pub use strata::{base_adjacency, StrataMatrix};

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("unknown node id `{0}`")]
    UnknownNode(String),
    #[error("unknown node type `{0}`")]
    UnknownType(String),
    #[error("self-loop edge on `{0}`")]
    SelfLoop(String),
    #[error(
        "node `{id}` has type `{node_type}` but labels are restricted to target type `{target}`"
    )]
    LabelOnNonTarget {
        id: String,
        node_type: String,
        target: String,
    },
    #[error("node `{0}` is labeled twice")]
    DuplicateLabel(String),
    #[error("type `{node_type}` expects {expected} features, found {found}")]
    FeatureWidth {
        node_type: String,
        expected: usize,
        found: usize,
    },
    #[error("node `{id}` already assigned to split `{previous}`")]
    OverlappingSplit { id: String, previous: Split },
    #[error("node `{0}` is in a split but has no label")]
    SplitOnUnlabeled(String),
    #[error("invalid split `{0}` (expected train, val or test)")]
    InvalidSplit(String),
    #[error("invalid feature value `{0}`")]
    BadFeature(String),
    #[error("cannot fold the labeled target type `{0}` into features")]
    FoldTarget(String),
    #[error("missing column: {0}")]
    MissingColumn(&'static str),
    #[error("{}:{line}: {kind} (token `{token}`)", file.display())]
    At {
        file: PathBuf,
        line: usize,
        token: String,
        kind: Box<GraphError>,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// A node type: unique symbolic name plus its dense index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeTypeId {
    pub name: String,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    Unassigned,
}

impl Split {
    pub fn parse(token: &str) -> Result<Self, GraphError> {
        match token {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(GraphError::InvalidSplit(other.to_string())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Undirected edge with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub edge_type: Option<usize>,
}

/// Raw features of every node of one type, rows in within-type file order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBlock {
    pub nodes: Vec<usize>,
    pub features: DenseMatrix,
    /// `true` when the type had no features in the input and got one-hot rows.
    pub one_hot: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeteroGraph {
    node_ids: Vec<String>,
    node_types: Vec<usize>,
    local_index: Vec<usize>,
    types: Vec<NodeTypeId>,
    edge_type_names: Vec<String>,
    edges: Vec<Edge>,
    blocks: Vec<FeatureBlock>,
    target_type: Option<usize>,
    class_names: Vec<String>,
    labels: Vec<Option<usize>>,
    splits: Vec<Split>,
}

impl HeteroGraph {
    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn node_id(&self, i: usize) -> &str {
        &self.node_ids[i]
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|n| n == id)
    }

    pub fn node_type(&self, i: usize) -> usize {
        self.node_types[i]
    }

    pub fn types(&self) -> &[NodeTypeId] {
        &self.types
    }

    pub fn type_index(&self, name: &str) -> Option<usize> {
        self.types.iter().position(|t| t.name == name)
    }

    pub fn type_name(&self, t: usize) -> &str {
        &self.types[t].name
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_type_names(&self) -> &[String] {
        &self.edge_type_names
    }

    /// Feature block of type `t`.
    pub fn block(&self, t: usize) -> &FeatureBlock {
        &self.blocks[t]
    }

    pub fn blocks(&self) -> &[FeatureBlock] {
        &self.blocks
    }

    /// Raw feature row of node `i` (within its type block).
    pub fn features_of(&self, i: usize) -> &[f64] {
        self.blocks[self.node_types[i]]
            .features
            .row(self.local_index[i])
    }

    pub fn target_type(&self) -> Option<usize> {
        self.target_type
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn label(&self, i: usize) -> Option<usize> {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    /// Labels with `usize::MAX` standing in for unlabeled nodes.
    pub fn dense_labels(&self) -> Vec<usize> {
        self.labels
            .iter()
            .map(|l| l.unwrap_or(usize::MAX))
            .collect()
    }

    pub fn split(&self, i: usize) -> Split {
        self.splits[i]
    }

    pub fn nodes_in(&self, split: Split) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| self.splits[i] == split)
            .collect()
    }

    pub fn labeled_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| self.labels[i].is_some())
            .collect()
    }

    /// Returns a copy with the given split assignment replaced.
    pub fn with_splits(&self, splits: Vec<Split>) -> Result<HeteroGraph, GraphError> {
        assert_eq!(splits.len(), self.node_count());
        for (i, s) in splits.iter().enumerate() {
            if *s != Split::Unassigned && self.labels[i].is_none() {
                return Err(GraphError::SplitOnUnlabeled(self.node_ids[i].clone()));
            }
        }
        let mut g = self.clone();
        g.splits = splits;
        Ok(g)
    }

    /// Replaces the nodes of type `folded` with bag-of-neighbor features on the nodes
    /// of type `host`. Folded nodes, and every edge touching them, are removed.
    ///
    /// The bag vocabulary is the folded nodes in node order; a host row gets a 1 for
    /// every adjacent folded node, appended after its own raw features (if it had any).
    pub fn fold_type_into_features(
        &self,
        folded: &str,
        host: &str,
    ) -> Result<HeteroGraph, GraphError> {
        let ft = self
            .type_index(folded)
            .ok_or_else(|| GraphError::UnknownType(folded.to_string()))?;
        let ht = self
            .type_index(host)
            .ok_or_else(|| GraphError::UnknownType(host.to_string()))?;
        if Some(ft) == self.target_type {
            return Err(GraphError::FoldTarget(folded.to_string()));
        }
        let vocab: HashMap<usize, usize> = self.blocks[ft]
            .nodes
            .iter()
            .enumerate()
            .map(|(v, &node)| (node, v))
            .collect();
        let mut bags: HashMap<usize, Vec<f64>> = HashMap::new();
        for e in &self.edges {
            for (h, f) in [(e.a, e.b), (e.b, e.a)] {
                if self.node_types[h] == ht && self.node_types[f] == ft {
                    bags.entry(h).or_insert_with(|| vec![0.0; vocab.len()])[vocab[&f]] = 1.0;
                }
            }
        }

        let mut b = GraphBuilder::new();
        for i in 0..self.node_count() {
            let t = self.node_types[i];
            if t == ft {
                continue;
            }
            let feats = if t == ht {
                let mut row = if self.blocks[t].one_hot {
                    Vec::new()
                } else {
                    self.features_of(i).to_vec()
                };
                match bags.get(&i) {
                    Some(bag) => row.extend_from_slice(bag),
                    None => row.extend(std::iter::repeat_n(0.0, vocab.len())),
                }
                Some(row)
            } else if self.blocks[t].one_hot {
                None
            } else {
                Some(self.features_of(i).to_vec())
            };
            b.add_node(&self.node_ids[i], &self.types[t].name, feats)?;
        }
        for e in &self.edges {
            if self.node_types[e.a] == ft || self.node_types[e.b] == ft {
                continue;
            }
            let et = e.edge_type.map(|t| self.edge_type_names[t].as_str());
            b.add_edge(&self.node_ids[e.a], &self.node_ids[e.b], et)?;
        }
        if let Some(t) = self.target_type {
            b.set_target_type(&self.types[t].name)?;
        }
        for i in 0..self.node_count() {
            if let Some(c) = self.labels[i] {
                b.set_label(&self.node_ids[i], &self.class_names[c])?;
            }
        }
        for i in 0..self.node_count() {
            if self.splits[i] != Split::Unassigned {
                b.set_split(&self.node_ids[i], self.splits[i])?;
            }
        }
        b.build()
    }
}

struct TypeState {
    /// `Some(Some(w))` explicit width, `Some(None)` featureless; `None` before the first node.
    width: Option<Option<usize>>,
    nodes: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

/// Incremental, validating constructor for [`HeteroGraph`].
///
/// Every method checks its own invariant immediately so a file loader can attach
/// the offending line to the error.
#[derive(Default)]
pub struct GraphBuilder {
    node_ids: Vec<String>,
    id_lookup: HashMap<String, usize>,
    node_types: Vec<usize>,
    local_index: Vec<usize>,
    type_names: Vec<String>,
    type_lookup: HashMap<String, usize>,
    type_states: Vec<TypeState>,
    edge_type_names: Vec<String>,
    edge_type_lookup: HashMap<String, usize>,
    edges: Vec<Edge>,
    edge_set: std::collections::HashSet<(usize, usize)>,
    target_type: Option<usize>,
    class_names: Vec<String>,
    class_lookup: HashMap<String, usize>,
    labels: Vec<Option<usize>>,
    splits: Vec<Split>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn index_of(&self, id: &str) -> Result<usize, GraphError> {
        self.id_lookup
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(id.to_string()))
    }

    /// Adds a node; `features = None` marks the node as featureless.
    pub fn add_node(
        &mut self,
        id: &str,
        node_type: &str,
        features: Option<Vec<f64>>,
    ) -> Result<usize, GraphError> {
        if self.id_lookup.contains_key(id) {
            return Err(GraphError::DuplicateNode(id.to_string()));
        }
        let t = match self.type_lookup.get(node_type) {
            Some(&t) => t,
            None => {
                let t = self.type_names.len();
                self.type_names.push(node_type.to_string());
                self.type_lookup.insert(node_type.to_string(), t);
                self.type_states.push(TypeState {
                    width: None,
                    nodes: Vec::new(),
                    rows: Vec::new(),
                });
                t
            }
        };
        let state = &mut self.type_states[t];
        let width = features.as_ref().map(Vec::len);
        match state.width {
            None => state.width = Some(width),
            Some(expected) if expected != width => {
                return Err(GraphError::FeatureWidth {
                    node_type: node_type.to_string(),
                    expected: expected.unwrap_or(0),
                    found: width.unwrap_or(0),
                });
            }
            Some(_) => {}
        }
        let idx = self.node_ids.len();
        self.local_index.push(state.nodes.len());
        state.nodes.push(idx);
        if let Some(f) = features {
            state.rows.push(f);
        }
        self.node_ids.push(id.to_string());
        self.id_lookup.insert(id.to_string(), idx);
        self.node_types.push(t);
        self.labels.push(None);
        self.splits.push(Split::Unassigned);
        Ok(idx)
    }

    /// Adds the undirected edge `{src, dst}`. Returns `false` when it was already present.
    pub fn add_edge(
        &mut self,
        src: &str,
        dst: &str,
        edge_type: Option<&str>,
    ) -> Result<bool, GraphError> {
        let a = self.index_of(src)?;
        let b = self.index_of(dst)?;
        if a == b {
            return Err(GraphError::SelfLoop(src.to_string()));
        }
        let (a, b) = (a.min(b), a.max(b));
        if !self.edge_set.insert((a, b)) {
            return Ok(false);
        }
        let edge_type = edge_type.map(|name| match self.edge_type_lookup.get(name) {
            Some(&t) => t,
            None => {
                let t = self.edge_type_names.len();
                self.edge_type_names.push(name.to_string());
                self.edge_type_lookup.insert(name.to_string(), t);
                t
            }
        });
        self.edges.push(Edge { a, b, edge_type });
        Ok(true)
    }

    pub fn set_target_type(&mut self, name: &str) -> Result<(), GraphError> {
        let t = self
            .type_lookup
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownType(name.to_string()))?;
        self.target_type = Some(t);
        Ok(())
    }

    /// Labels a node. The first labeled node fixes the target type unless it was set.
    pub fn set_label(&mut self, id: &str, class: &str) -> Result<usize, GraphError> {
        let i = self.index_of(id)?;
        let t = self.node_types[i];
        match self.target_type {
            None => self.target_type = Some(t),
            Some(target) if target != t => {
                return Err(GraphError::LabelOnNonTarget {
                    id: id.to_string(),
                    node_type: self.type_names[t].clone(),
                    target: self.type_names[target].clone(),
                });
            }
            Some(_) => {}
        }
        if self.labels[i].is_some() {
            return Err(GraphError::DuplicateLabel(id.to_string()));
        }
        let c = match self.class_lookup.get(class) {
            Some(&c) => c,
            None => {
                let c = self.class_names.len();
                self.class_names.push(class.to_string());
                self.class_lookup.insert(class.to_string(), c);
                c
            }
        };
        self.labels[i] = Some(c);
        Ok(c)
    }

    pub fn set_split(&mut self, id: &str, split: Split) -> Result<(), GraphError> {
        let i = self.index_of(id)?;
        if self.labels[i].is_none() {
            return Err(GraphError::SplitOnUnlabeled(id.to_string()));
        }
        if self.splits[i] != Split::Unassigned {
            return Err(GraphError::OverlappingSplit {
                id: id.to_string(),
                previous: self.splits[i],
            });
        }
        self.splits[i] = split;
        Ok(())
    }

    pub fn build(self) -> Result<HeteroGraph, GraphError> {
        let types = self
            .type_names
            .iter()
            .enumerate()
            .map(|(index, name)| NodeTypeId {
                name: name.clone(),
                index,
            })
            .collect();
        let blocks = self
            .type_states
            .into_iter()
            .map(|st| {
                let count = st.nodes.len();
                match st.width.flatten() {
                    Some(w) => {
                        let mut data = Vec::with_capacity(count * w);
                        for r in st.rows {
                            data.extend(r);
                        }
                        FeatureBlock {
                            nodes: st.nodes,
                            features: DenseMatrix::from_vec(count, w, data)
                                .expect("rows validated on insert"),
                            one_hot: false,
                        }
                    }
                    None => FeatureBlock {
                        nodes: st.nodes,
                        features: DenseMatrix::identity(count),
                        one_hot: true,
                    },
                }
            })
            .collect();
        Ok(HeteroGraph {
            node_ids: self.node_ids,
            node_types: self.node_types,
            local_index: self.local_index,
            types,
            edge_type_names: self.edge_type_names,
            edges: self.edges,
            blocks,
            target_type: self.target_type,
            class_names: self.class_names,
            labels: self.labels,
            splits: self.splits,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_node() -> HeteroGraph {
        let mut b = GraphBuilder::new();
        b.add_node("a1", "author", Some(vec![1.0, 2.0])).unwrap();
        b.add_node("p1", "paper", Some(vec![0.5, 0.0, 1.0]))
            .unwrap();
        b.add_node("c1", "conf", Some(vec![3.0])).unwrap();
        b.add_edge("a1", "p1", Some("writes")).unwrap();
        b.add_edge("p1", "c1", Some("published_in")).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn minimal_graph_has_three_blocks() {
        let g = three_node();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.types().len(), 3);
        assert_eq!(g.block(1).features.shape(), (1, 3));
        assert_eq!(g.features_of(2), &[3.0]);
    }

    #[test]
    fn featureless_type_gets_one_hot_rows() {
        let mut b = GraphBuilder::new();
        b.add_node("c1", "conf", None).unwrap();
        b.add_node("c2", "conf", None).unwrap();
        let g = b.build().unwrap();
        assert!(g.block(0).one_hot);
        assert_eq!(g.features_of(1), &[0.0, 1.0]);
    }

    #[test]
    fn feature_width_mismatch_is_rejected() {
        let mut b = GraphBuilder::new();
        b.add_node("a", "t", Some(vec![1.0])).unwrap();
        assert!(matches!(
            b.add_node("b", "t", Some(vec![1.0, 2.0])),
            Err(GraphError::FeatureWidth { .. })
        ));
        assert!(matches!(
            b.add_node("c", "t", None),
            Err(GraphError::FeatureWidth { .. })
        ));
    }

    #[test]
    fn duplicate_edges_and_reverse_rows_collapse() {
        let mut b = GraphBuilder::new();
        b.add_node("x", "t", None).unwrap();
        b.add_node("y", "t", None).unwrap();
        assert!(b.add_edge("x", "y", None).unwrap());
        assert!(!b.add_edge("y", "x", None).unwrap());
        assert!(matches!(
            b.add_edge("x", "x", None),
            Err(GraphError::SelfLoop(_))
        ));
        assert_eq!(b.build().unwrap().edges().len(), 1);
    }

    #[test]
    fn labels_restricted_to_target_type() {
        let mut b = GraphBuilder::new();
        b.add_node("a", "author", None).unwrap();
        b.add_node("p", "paper", None).unwrap();
        b.set_label("a", "db").unwrap();
        assert!(matches!(
            b.set_label("p", "db"),
            Err(GraphError::LabelOnNonTarget { .. })
        ));
    }

    #[test]
    fn splits_must_be_disjoint_and_labeled() {
        let mut b = GraphBuilder::new();
        b.add_node("a", "author", None).unwrap();
        b.add_node("b", "author", None).unwrap();
        b.set_label("a", "x").unwrap();
        b.set_split("a", Split::Train).unwrap();
        assert!(matches!(
            b.set_split("a", Split::Test),
            Err(GraphError::OverlappingSplit { .. })
        ));
        assert!(matches!(
            b.set_split("b", Split::Val),
            Err(GraphError::SplitOnUnlabeled(_))
        ));
    }

    #[test]
    fn base_adjacency_counts() {
        let g = three_node();
        let a = base_adjacency(&g);
        assert_eq!(a.nnz(), 3 + 2 * 2);
        assert!(a.is_symmetric() && a.has_unit_diagonal());
        assert_eq!(a.row(0), &[0, 1]);
    }

    #[test]
    fn edgeless_graph_is_identity() {
        let mut b = GraphBuilder::new();
        for i in 0..4 {
            b.add_node(&format!("n{i}"), "t", None).unwrap();
        }
        let a = base_adjacency(&b.build().unwrap());
        for i in 0..4 {
            assert_eq!(a.row(i), &[i]);
        }
    }

    #[test]
    fn single_edge_is_all_ones() {
        let mut b = GraphBuilder::new();
        b.add_node("0", "t", None).unwrap();
        b.add_node("1", "t", None).unwrap();
        b.add_edge("0", "1", None).unwrap();
        let a = base_adjacency(&b.build().unwrap());
        assert_eq!(a.to_dense(), vec![vec![true, true], vec![true, true]]);
    }

    #[test]
    fn fold_terms_into_paper_features() {
        let mut b = GraphBuilder::new();
        b.add_node("a1", "A", None).unwrap();
        b.add_node("p1", "P", None).unwrap();
        b.add_node("p2", "P", None).unwrap();
        b.add_node("c1", "C", None).unwrap();
        b.add_node("t1", "T", None).unwrap();
        b.add_node("t2", "T", None).unwrap();
        b.add_edge("a1", "p1", None).unwrap();
        b.add_edge("a1", "p2", None).unwrap();
        b.add_edge("p1", "c1", None).unwrap();
        b.add_edge("p1", "t2", None).unwrap();
        b.add_edge("p2", "t1", None).unwrap();
        b.add_edge("p2", "t2", None).unwrap();
        b.set_label("a1", "ml").unwrap();
        let g = b
            .build()
            .unwrap()
            .fold_type_into_features("T", "P")
            .unwrap();
        assert_eq!(g.types().len(), 3);
        assert_eq!(g.node_count(), 4);
        let p = g.type_index("P").unwrap();
        assert!(!g.block(p).one_hot);
        assert_eq!(g.features_of(g.index_of("p1").unwrap()), &[0.0, 1.0]);
        assert_eq!(g.features_of(g.index_of("p2").unwrap()), &[1.0, 1.0]);
        assert_eq!(g.edges().len(), 3);
        assert_eq!(g.label(0), Some(0));
    }
}
