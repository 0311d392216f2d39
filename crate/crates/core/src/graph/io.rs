use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{GraphBuilder, GraphError, HeteroGraph, Split};

/// Locations of the four TSV files that describe a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphPaths {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    pub labels: Option<PathBuf>,
    pub splits: Option<PathBuf>,
}

impl GraphPaths {
    /// `nodes.tsv`, `edges.tsv`, `labels.tsv` and `splits.tsv` inside `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            nodes: dir.join("nodes.tsv"),
            edges: dir.join("edges.tsv"),
            labels: Some(dir.join("labels.tsv")),
            splits: Some(dir.join("splits.tsv")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Declared target type; inferred from the first label line when absent.
    pub target_type: Option<String>,
    /// `(folded, host)` pairs applied after loading, see
    /// [`HeteroGraph::fold_type_into_features`].
    pub fold: Vec<(String, String)>,
}

pub fn load_graph(
    nodes_path: impl AsRef<Path>,
    edges_path: impl AsRef<Path>,
    labels_path: Option<&Path>,
    splits_path: Option<&Path>,
) -> Result<HeteroGraph, GraphError> {
    let paths = GraphPaths {
        nodes: nodes_path.as_ref().to_path_buf(),
        edges: edges_path.as_ref().to_path_buf(),
        labels: labels_path.map(Path::to_path_buf),
        splits: splits_path.map(Path::to_path_buf),
    };
    load_graph_with(&paths, &LoadOptions::default())
}

struct Line<'a> {
    number: usize,
    cols: Vec<&'a str>,
}

fn read(path: &Path) -> Result<String, GraphError> {
    fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn lines(text: &str) -> impl Iterator<Item = Line<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() || raw.starts_with('#') {
            return None;
        }
        Some(Line {
            number: i + 1,
            cols: raw.split('\t').collect(),
        })
    })
}

fn at(path: &Path, line: usize, token: &str, kind: GraphError) -> GraphError {
    GraphError::At {
        file: path.to_path_buf(),
        line,
        token: token.to_string(),
        kind: Box::new(kind),
    }
}

fn column<'a>(
    path: &Path,
    line: &Line<'a>,
    idx: usize,
    what: &'static str,
) -> Result<&'a str, GraphError> {
    match line.cols.get(idx) {
        Some(c) if !c.is_empty() => Ok(c),
        _ => Err(at(
            path,
            line.number,
            line.cols.join("\t").as_str(),
            GraphError::MissingColumn(what),
        )),
    }
}

fn parse_features(token: &str) -> Result<Vec<f64>, GraphError> {
    token
        .split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| GraphError::BadFeature(t.to_string()))
        })
        .collect()
}

/// Reads a graph from TSV files. Node order follows the nodes file.
pub fn load_graph_with(paths: &GraphPaths, opts: &LoadOptions) -> Result<HeteroGraph, GraphError> {
    let mut b = GraphBuilder::new();

    let text = read(&paths.nodes)?;
    for line in lines(&text) {
        let p = &paths.nodes;
        let id = column(p, &line, 0, "node_id")?;
        let ty = column(p, &line, 1, "node_type")?;
        let feats = match line.cols.get(2).map(|s| s.trim()).filter(|s| !s.is_empty()) {
            Some(tok) => Some(parse_features(tok).map_err(|e| at(p, line.number, tok, e))?),
            None => None,
        };
        b.add_node(id, ty, feats).map_err(|e| {
            let token = match e {
                GraphError::DuplicateNode(_) => id,
                _ => line.cols.get(2).copied().unwrap_or(ty),
            };
            at(p, line.number, token, e)
        })?;
    }

    let text = read(&paths.edges)?;
    for line in lines(&text) {
        let p = &paths.edges;
        let src = column(p, &line, 0, "src_id")?;
        let dst = column(p, &line, 1, "dst_id")?;
        let et = line.cols.get(2).map(|s| s.trim()).filter(|s| !s.is_empty());
        b.add_edge(src, dst, et).map_err(|e| {
            let token = match &e {
                GraphError::UnknownNode(id) => id.clone(),
                _ => src.to_string(),
            };
            at(p, line.number, &token, e)
        })?;
    }

    if let Some(t) = &opts.target_type {
        b.set_target_type(t)?;
    }

    if let Some(p) = &paths.labels {
        let text = read(p)?;
        for line in lines(&text) {
            let id = column(p, &line, 0, "node_id")?;
            let class = column(p, &line, 1, "class_name")?;
            b.set_label(id, class)
                .map_err(|e| at(p, line.number, id, e))?;
        }
    }

    if let Some(p) = &paths.splits {
        let text = read(p)?;
        for line in lines(&text) {
            let id = column(p, &line, 0, "node_id")?;
            let tok = column(p, &line, 1, "split")?;
            let split = Split::parse(tok).map_err(|e| at(p, line.number, tok, e))?;
            b.set_split(id, split)
                .map_err(|e| at(p, line.number, id, e))?;
        }
    }

    let mut g = b.build()?;
    for (folded, host) in &opts.fold {
        g = g.fold_type_into_features(folded, host)?;
    }
    Ok(g)
}

fn write(path: &Path, body: String) -> Result<(), GraphError> {
    fs::write(path, body).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `g` as `nodes.tsv`, `edges.tsv`, `labels.tsv` and `splits.tsv` in `dir`.
///
/// Features are always written explicitly, so one-hot defaults come back as
/// ordinary feature rows.
pub fn write_graph(g: &HeteroGraph, dir: impl AsRef<Path>) -> Result<GraphPaths, GraphError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| GraphError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let paths = GraphPaths::in_dir(dir);

    let mut nodes = String::from("# node_id\tnode_type\tfeatures\n");
    for i in 0..g.node_count() {
        let feats: Vec<String> = g.features_of(i).iter().map(f64::to_string).collect();
        let _ = writeln!(
            nodes,
            "{}\t{}\t{}",
            g.node_id(i),
            g.type_name(g.node_type(i)),
            feats.join(",")
        );
    }
    write(&paths.nodes, nodes)?;

    let mut edges = String::from("# src_id\tdst_id\tedge_type\n");
    for e in g.edges() {
        let _ = write!(edges, "{}\t{}", g.node_id(e.a), g.node_id(e.b));
        if let Some(t) = e.edge_type {
            let _ = write!(edges, "\t{}", g.edge_type_names()[t]);
        }
        edges.push('\n');
    }
    write(&paths.edges, edges)?;

    let mut labels = String::new();
    let mut splits = String::new();
    for i in 0..g.node_count() {
        if let Some(c) = g.label(i) {
            let _ = writeln!(labels, "{}\t{}", g.node_id(i), g.class_names()[c]);
        }
        if g.split(i) != Split::Unassigned {
            let _ = writeln!(splits, "{}\t{}", g.node_id(i), g.split(i));
        }
    }
    write(paths.labels.as_ref().expect("in_dir sets labels"), labels)?;
    write(paths.splits.as_ref().expect("in_dir sets splits"), splits)?;
    Ok(paths)
}
