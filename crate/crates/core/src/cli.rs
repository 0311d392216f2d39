//! The `hcn` command line.
//!
//! Training settings resolve in three layers: command-line flags, then a TOML file
//! given with `--config` (keys named like [`TrainConfig`] fields), then the
//! built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::eval::{
    classification_report, cluster_report, dilation_study, kmeans, sweep_k, write_dilation_csv,
    write_sweep_csv, MetricsReport,
};
use crate::graph::{
    base_adjacency, load_graph_with, write_graph, GraphPaths, HeteroGraph, LoadOptions, Split,
};
use crate::kstrata::{expand_strata, read_strata_cache, write_strata_cache};
use crate::model::{fit, load_model, save_model, write_embedding, TrainConfig};
use crate::synthetic::{planted_partition, relay_graph, toy_graph, PlantedConfig, RelayConfig};

#[derive(Debug, Parser)]
#[command(
    name = "hcn",
    version,
    about = "Heterogeneous graph convolution over k-strata adjacency"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the k-strata matrix of a graph and write it as a binary cache.
    BuildStrata(BuildStrataArgs),
    /// Train a model; writes model.bin, embedding.tsv and metrics.json.
    Train(TrainArgs),
    /// Classification metrics of a trained model on one split.
    Eval(EvalArgs),
    /// K-means on a trained embedding; NMI and ARI averaged over restarts.
    Cluster(ClusterArgs),
    /// Train and evaluate once per k.
    SweepK(SweepKArgs),
    /// Compare dilated runs against the undilated baseline over several seeds.
    SweepDilation(SweepDilationArgs),
    /// Write a bundled synthetic graph as TSV files.
    GenSynthetic(GenSyntheticArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Nodes TSV: node_id, node_type, optional comma-separated features.
    #[arg(long)]
    pub graph_nodes: PathBuf,
    /// Edges TSV: src_id, dst_id, optional edge_type.
    #[arg(long)]
    pub graph_edges: PathBuf,
    /// Labels TSV: node_id, class_name.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Splits TSV: node_id, train|val|test.
    #[arg(long)]
    pub splits: Option<PathBuf>,
    /// Node type that carries labels; inferred from the first label when omitted.
    #[arg(long)]
    pub target_type: Option<String>,
    /// Fold a node type into the features of a neighboring type, as FOLDED:HOST.
    #[arg(long, value_name = "FOLDED:HOST")]
    pub fold_type: Vec<String>,
}

impl GraphArgs {
    pub fn load(&self) -> Result<HeteroGraph> {
        let fold = self
            .fold_type
            .iter()
            .map(|s| {
                s.split_once(':')
                    .map(|(a, b)| (a.to_string(), b.to_string()))
                    .with_context(|| format!("--fold-type expects FOLDED:HOST, got `{s}`"))
            })
            .collect::<Result<_>>()?;
        let paths = GraphPaths {
            nodes: self.graph_nodes.clone(),
            edges: self.graph_edges.clone(),
            labels: self.labels.clone(),
            splits: self.splits.clone(),
        };
        let opts = LoadOptions {
            target_type: self.target_type.clone(),
            fold,
        };
        Ok(load_graph_with(&paths, &opts)?)
    }
}

/// Training settings that flags or a config file may override. `k` is set per
/// subcommand.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    #[arg(skip)]
    pub k: Option<usize>,
    /// Hidden units per layer [default: 64]
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Number of convolution layers [default: 2]
    #[arg(long)]
    pub layers: Option<usize>,
    /// Width of the fused features [default: same as --hidden]
    #[arg(long)]
    pub fused_width: Option<usize>,
    /// Adam learning rate [default: 0.01]
    #[arg(long)]
    pub lr: Option<f64>,
    /// L2 weight decay on every parameter [default: 0.0005]
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Dropout rate on each layer's input [default: 0.5]
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Early-stopping patience in epochs [default: 100]
    #[arg(long)]
    pub patience: Option<usize>,
    /// Epoch limit [default: 1000]
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Percentage of strata pairs dropped per dilation; 0 disables [default: 0]
    #[arg(long)]
    pub dilate_p: Option<f64>,
    /// Epochs between re-drops [default: 20]
    #[arg(long)]
    pub dilate_q: Option<usize>,
    /// Seed for every random stream [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML file with default values for the settings above
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl TrainOverrides {
    /// Flags over config file over defaults, with `k` from the subcommand.
    pub fn resolve(&self, k: Option<usize>) -> Result<TrainConfig> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                toml::from_str::<TrainOverrides>(&text)
                    .with_context(|| format!("parsing {}", path.display()))?
            }
            None => TrainOverrides::default(),
        };
        let d = TrainConfig::default();
        let cfg = TrainConfig {
            k: k.or(file.k).unwrap_or(d.k),
            hidden: self.hidden.or(file.hidden).unwrap_or(d.hidden),
            layers: self.layers.or(file.layers).unwrap_or(d.layers),
            fused_width: self.fused_width.or(file.fused_width).or(d.fused_width),
            lr: self.lr.or(file.lr).unwrap_or(d.lr),
            weight_decay: self
                .weight_decay
                .or(file.weight_decay)
                .unwrap_or(d.weight_decay),
            dropout: self.dropout.or(file.dropout).unwrap_or(d.dropout),
            max_epochs: self.max_epochs.or(file.max_epochs).unwrap_or(d.max_epochs),
            patience: self.patience.or(file.patience).unwrap_or(d.patience),
            seed: self.seed.or(file.seed).unwrap_or(d.seed),
            dilate_p: self.dilate_p.or(file.dilate_p).unwrap_or(d.dilate_p),
            dilate_q: self.dilate_q.or(file.dilate_q).unwrap_or(d.dilate_q),
        };
        let problems = cfg.problems();
        if !problems.is_empty() {
            bail!("invalid configuration:\n  {}", problems.join("\n  "));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct BuildStrataArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Strata order [default: 2]
    #[arg(long)]
    pub k: Option<usize>,
    /// Cache file to write [default: <out-dir>/strata_k<k>.bin]
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Strata order [default: 2, or the order of --strata-cache]
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub train: TrainOverrides,
    /// Precomputed strata cache to train on instead of expanding the graph
    #[arg(long)]
    pub strata_cache: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Val,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Val => Split::Val,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Checkpoint written by `train`
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// K-means restarts
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    /// K-means seed [default: the training seed]
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepKArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Strata orders to compare, comma separated
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub k: Vec<usize>,
    #[command(flatten)]
    pub train: TrainOverrides,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepDilationArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Strata order [default: 2]
    #[arg(long)]
    pub k: Option<usize>,
    /// Dilation percentages, comma separated
    #[arg(long, value_delimiter = ',', default_value = "0,30,50")]
    pub p: Vec<f64>,
    /// Training seeds averaged per percentage
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    pub seeds: Vec<u64>,
    #[command(flatten)]
    pub train: TrainOverrides,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum SyntheticKind {
    /// Targets sharing class-pooled attribute nodes
    Planted,
    /// Class signal three hops out, behind relay and pool nodes
    Relay,
    /// The 11-node author/paper/conference example
    Toy,
}

#[derive(Debug, Args)]
pub struct GenSyntheticArgs {
    #[arg(long, value_enum, default_value = "planted")]
    pub kind: SyntheticKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Applies `HCN_THREADS` (0 or unset: one thread per core) to the global pool.
pub fn configure_threads() -> Result<()> {
    let n = match std::env::var("HCN_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .with_context(|| format!("HCN_THREADS must be a thread count, got `{v}`"))?,
        Err(_) => 0,
    };
    if n > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::BuildStrata(a) => cmd_build_strata(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Cluster(a) => cmd_cluster(&a),
        Command::SweepK(a) => cmd_sweep_k(&a),
        Command::SweepDilation(a) => cmd_sweep_dilation(&a),
        Command::GenSynthetic(a) => cmd_gen_synthetic(&a),
    }
}

pub fn cmd_build_strata(a: &BuildStrataArgs) -> Result<()> {
    let k = a.k.unwrap_or(TrainConfig::default().k);
    if k == 0 {
        bail!("k must be >= 1");
    }
    let g = a.graph.load()?;
    let ak = expand_strata(&base_adjacency(&g), k)?;
    let out = match &a.out {
        Some(p) => p.clone(),
        None => {
            create_dir(&a.out_dir)?;
            a.out_dir.join(format!("strata_k{k}.bin"))
        }
    };
    write_strata_cache(&out, &ak)?;
    println!(
        "n={} k={} density={:.6} -> {}",
        ak.n(),
        k,
        ak.density(),
        out.display()
    );
    Ok(())
}

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let start = Instant::now();
    let g = a.graph.load()?;
    let cache = match &a.strata_cache {
        Some(p) => Some(read_strata_cache(p)?),
        None => None,
    };
    let k = a.k.or(cache.as_ref().map(|c| c.order()));
    let cfg = a.train.resolve(k)?;
    let ak = match cache {
        Some(c) => {
            if c.n() != g.node_count() {
                bail!(
                    "strata cache has {} nodes, graph has {}",
                    c.n(),
                    g.node_count()
                );
            }
            if c.order() != cfg.k {
                bail!("strata cache has order {}, but k = {}", c.order(), cfg.k);
            }
            c
        }
        None => expand_strata(&base_adjacency(&g), cfg.k)?,
    };
    let model = fit(&g, &ak, &cfg)?;

    create_dir(&a.out_dir)?;
    save_model(&model, a.out_dir.join("model.bin"))?;
    write_embedding(&g, &model.embedding, a.out_dir.join("embedding.tsv"))?;
    let mut report = MetricsReport::new(&model);
    let test = g.nodes_in(Split::Test);
    if !test.is_empty() {
        report = report.with_classification(classification_report(&g, &model.embedding, &test)?);
    }
    report.wall_clock_secs = Some(start.elapsed().as_secs_f64());
    write_json(&a.out_dir.join("metrics.json"), &report)?;

    let epochs = model.history.epochs.len();
    match (report.micro_f1, report.macro_f1) {
        (Some(mi), Some(ma)) => {
            println!(
                "epochs={epochs} best={:?} test micro_f1={mi:.4} macro_f1={ma:.4}",
                model.history.best_epoch
            )
        }
        _ => println!(
            "epochs={epochs} best={:?} (no test split)",
            model.history.best_epoch
        ),
    }
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let start = Instant::now();
    let g = a.graph.load()?;
    let model = load_model(&a.model)?;
    model.check_graph(&g)?;
    let mask = g.nodes_in(a.split.into());
    if mask.is_empty() {
        bail!("the {} split is empty", Split::from(a.split));
    }
    let cls = classification_report(&g, &model.embedding, &mask)?;
    println!(
        "{} micro_f1={:.4} macro_f1={:.4} nodes={}",
        Split::from(a.split),
        cls.micro_f1,
        cls.macro_f1,
        cls.nodes
    );
    let mut report = MetricsReport::new(&model).with_classification(cls);
    report.wall_clock_secs = Some(start.elapsed().as_secs_f64());
    create_dir(&a.out_dir)?;
    write_json(&a.out_dir.join("eval.json"), &report)
}

pub fn cmd_cluster(a: &ClusterArgs) -> Result<()> {
    let start = Instant::now();
    let g = a.graph.load()?;
    let model = load_model(&a.model)?;
    model.check_graph(&g)?;
    let seed = a.seed.unwrap_or(model.config.seed);
    let clu = cluster_report(&g, &model.embedding, a.restarts, seed)?;
    println!(
        "nmi={:.4} ari={:.4} restarts={} nodes={}",
        clu.nmi, clu.ari, a.restarts, clu.nodes
    );

    let nodes = g.labeled_nodes();
    let best = kmeans(
        &model.embedding.select_rows(&nodes),
        g.num_classes(),
        a.restarts,
        seed,
    )?;
    let mut tsv = String::new();
    for (&i, &c) in nodes.iter().zip(best.best_partition().labels()) {
        tsv.push_str(&format!("{}\t{c}\n", g.node_id(i)));
    }
    create_dir(&a.out_dir)?;
    fs::write(a.out_dir.join("clusters.tsv"), tsv)?;

    let mut report = MetricsReport::new(&model).with_clustering(clu);
    report.wall_clock_secs = Some(start.elapsed().as_secs_f64());
    write_json(&a.out_dir.join("cluster.json"), &report)
}

pub fn cmd_sweep_k(a: &SweepKArgs) -> Result<()> {
    if a.k.is_empty() {
        bail!("--k needs at least one value");
    }
    let g = a.graph.load()?;
    let cfg = a.train.resolve(Some(a.k[0]))?;
    let rows = sweep_k(&g, &cfg, &a.k, a.restarts)?;
    create_dir(&a.out_dir)?;
    write_sweep_csv(&rows, a.out_dir.join("sweep_k.csv"))?;
    write_json(&a.out_dir.join("sweep_k.json"), &rows)?;
    for r in &rows {
        let s = r.report.scores();
        println!(
            "k={} micro_f1={:.4} macro_f1={:.4} nmi={:.4} ari={:.4}",
            r.k, s.micro_f1, s.macro_f1, s.nmi, s.ari
        );
    }
    Ok(())
}

pub fn cmd_sweep_dilation(a: &SweepDilationArgs) -> Result<()> {
    if a.seeds.is_empty() {
        bail!("--seeds needs at least one value");
    }
    let g = a.graph.load()?;
    let cfg = a.train.resolve(a.k)?;
    if let Some(p) = a.p.iter().find(|p| !(0.0..100.0).contains(*p)) {
        bail!("dilation percentage {p} must be in [0, 100)");
    }
    let study = dilation_study(&g, &cfg, &a.p, &a.seeds, a.restarts)?;
    create_dir(&a.out_dir)?;
    write_dilation_csv(
        &study,
        a.out_dir.join("dilation_absolute.csv"),
        a.out_dir.join("dilation_relative.csv"),
    )?;
    write_json(&a.out_dir.join("dilation.json"), &study)?;
    for r in &study.rows {
        let (m, s) = (r.relative, r.relative_sd);
        println!(
            "p={} micro_f1={:.1}%±{:.1} macro_f1={:.1}%±{:.1} nmi={:.1}%±{:.1} ari={:.1}%±{:.1}",
            r.p, m.micro_f1, s.micro_f1, m.macro_f1, s.macro_f1, m.nmi, s.nmi, m.ari, s.ari
        );
    }
    Ok(())
}

pub fn cmd_gen_synthetic(a: &GenSyntheticArgs) -> Result<()> {
    let g = match a.kind {
        SyntheticKind::Planted => planted_partition(&PlantedConfig {
            seed: a.seed,
            ..PlantedConfig::default()
        }),
        SyntheticKind::Relay => relay_graph(&RelayConfig {
            seed: a.seed,
            ..RelayConfig::default()
        }),
        SyntheticKind::Toy => toy_graph(),
    };
    let paths = write_graph(&g, &a.out_dir)?;
    println!(
        "{} nodes, {} edges -> {}",
        g.node_count(),
        g.edges().len(),
        paths.nodes.parent().unwrap_or(Path::new(".")).display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    /// The `[default: …]` text in the help block of `--flag`.
    fn default_in_help(help: &str, flag: &str) -> String {
        let head = format!("--{flag} ");
        let mut lines = help
            .lines()
            .skip_while(|l| !l.trim_start().starts_with(&head));
        let mut block = lines.next().expect("flag present").to_string();
        block.extend(lines.take_while(|l| !l.trim_start().starts_with('-')));
        let start = block.find("[default: ").expect("flag lists its default") + 10;
        block[start..start + block[start..].find(']').unwrap()].to_string()
    }

    #[test]
    fn help_defaults_match_train_config() {
        let help = Cli::command()
            .find_subcommand_mut("train")
            .unwrap()
            .render_long_help()
            .to_string();
        let d = TrainConfig::default();
        assert_eq!(
            default_in_help(&help, "k"),
            "2, or the order of --strata-cache"
        );
        assert_eq!(default_in_help(&help, "hidden"), d.hidden.to_string());
        assert_eq!(default_in_help(&help, "layers"), d.layers.to_string());
        assert_eq!(default_in_help(&help, "lr"), d.lr.to_string());
        assert_eq!(
            default_in_help(&help, "weight-decay"),
            d.weight_decay.to_string()
        );
        assert_eq!(default_in_help(&help, "dropout"), d.dropout.to_string());
        assert_eq!(default_in_help(&help, "patience"), d.patience.to_string());
        assert_eq!(
            default_in_help(&help, "max-epochs"),
            d.max_epochs.to_string()
        );
        assert_eq!(default_in_help(&help, "dilate-p"), d.dilate_p.to_string());
        assert_eq!(default_in_help(&help, "dilate-q"), d.dilate_q.to_string());
        assert_eq!(default_in_help(&help, "seed"), d.seed.to_string());
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "lr = 0.05\nhidden = 8\nk = 3\n").unwrap();
        let o = TrainOverrides {
            hidden: Some(16),
            config: Some(path.clone()),
            ..TrainOverrides::default()
        };
        let cfg = o.resolve(None).unwrap();
        assert_eq!((cfg.k, cfg.hidden, cfg.lr), (3, 16, 0.05));
        assert_eq!(cfg.patience, 100);
        assert_eq!(o.resolve(Some(1)).unwrap().k, 1);

        fs::write(&path, "learning_rate = 1\n").unwrap();
        assert!(o.resolve(None).is_err());
    }

    #[test]
    fn invalid_settings_are_all_reported() {
        let o = TrainOverrides {
            dropout: Some(1.5),
            patience: Some(0),
            ..TrainOverrides::default()
        };
        let msg = o.resolve(Some(0)).unwrap_err().to_string();
        assert!(msg.contains("dropout") && msg.contains("patience") && msg.contains("k must"));
    }

    #[test]
    fn sweep_k_parses_list() {
        let cli = Cli::try_parse_from([
            "hcn",
            "sweep-k",
            "--graph-nodes",
            "n",
            "--graph-edges",
            "e",
            "--k",
            "1,2,3,4",
            "--out-dir",
            "o",
        ])
        .unwrap();
        match cli.command {
            Command::SweepK(a) => assert_eq!(a.k, vec![1, 2, 3, 4]),
            _ => unreachable!(),
        }
    }
}
