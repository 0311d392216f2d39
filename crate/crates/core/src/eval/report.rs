use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ari, confusion, f1, kmeans, micro_macro_f1, nmi, EvalError, Partition};
use crate::graph::{HeteroGraph, Split};
use crate::model::{
    predict_from, train, train_with_dilation, TrainConfig, TrainHistory, TrainedModel,
};
use crate::tensor::DenseMatrix;

pub const SWEEP_CSV_HEADER: &str = "k,p,micro_f1,macro_f1,nmi,ari";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub nodes: usize,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub per_class: Vec<ClassScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub nodes: usize,
    pub clusters: usize,
    /// Means over restarts.
    pub nmi: f64,
    pub ari: f64,
    pub nmi_runs: Vec<f64>,
    pub ari_runs: Vec<f64>,
    pub best_restart: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub nmi: f64,
    pub ari: f64,
}

impl Scores {
    pub fn as_array(&self) -> [f64; 4] {
        [self.micro_f1, self.macro_f1, self.nmi, self.ari]
    }

    fn from_array(a: [f64; 4]) -> Self {
        Self {
            micro_f1: a[0],
            macro_f1: a[1],
            nmi: a[2],
            ari: a[3],
        }
    }

    fn zip(&self, other: &Scores, f: impl Fn(f64, f64) -> f64) -> Scores {
        let (a, b) = (self.as_array(), other.as_array());
        Scores::from_array(std::array::from_fn(|i| f(a[i], b[i])))
    }
}

/// The JSON document written per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub micro_f1: Option<f64>,
    pub macro_f1: Option<f64>,
    pub nmi: Option<f64>,
    pub ari: Option<f64>,
    pub classification: Option<ClassificationReport>,
    pub clustering: Option<ClusterReport>,
    pub seed: u64,
    pub k: usize,
    pub p: f64,
    pub q: usize,
    pub config: TrainConfig,
    pub history: TrainHistory,
    pub wall_clock_secs: Option<f64>,
}

impl MetricsReport {
    pub fn new(model: &TrainedModel) -> Self {
        let c = &model.config;
        Self {
            micro_f1: None,
            macro_f1: None,
            nmi: None,
            ari: None,
            classification: None,
            clustering: None,
            seed: c.seed,
            k: c.k,
            p: c.dilate_p,
            q: c.dilate_q,
            config: c.clone(),
            history: model.history.clone(),
            wall_clock_secs: None,
        }
    }

    pub fn with_classification(mut self, r: ClassificationReport) -> Self {
        self.micro_f1 = Some(r.micro_f1);
        self.macro_f1 = Some(r.macro_f1);
        self.classification = Some(r);
        self
    }

    pub fn with_clustering(mut self, r: ClusterReport) -> Self {
        self.nmi = Some(r.nmi);
        self.ari = Some(r.ari);
        self.clustering = Some(r);
        self
    }

    /// Missing metrics read as NaN.
    pub fn scores(&self) -> Scores {
        Scores {
            micro_f1: self.micro_f1.unwrap_or(f64::NAN),
            macro_f1: self.macro_f1.unwrap_or(f64::NAN),
            nmi: self.nmi.unwrap_or(f64::NAN),
            ari: self.ari.unwrap_or(f64::NAN),
        }
    }
}

/// Scores arg-max predictions of `z` on `mask` against the graph's labels.
pub fn classification_report(
    g: &HeteroGraph,
    z: &DenseMatrix,
    mask: &[usize],
) -> Result<ClassificationReport, EvalError> {
    let pred = Partition(predict_from(z, mask)?);
    let truth = Partition(
        mask.iter()
            .map(|&i| g.label(i).ok_or(EvalError::NoLabeledNodes))
            .collect::<Result<_, _>>()?,
    );
    let (micro, macro_) = micro_macro_f1(&pred, &truth)?;
    let acc = super::accuracy(&pred, &truth)?;
    assert!(
        (micro - acc).abs() < 1e-12,
        "micro-F1 {micro} differs from accuracy {acc}"
    );
    let counts = confusion(&pred.0, &truth.0);
    let per_class = g
        .class_names()
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let (tp, fp, fn_) = counts.get(c).copied().unwrap_or((0, 0, 0));
            let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
            ClassScore {
                class: name.clone(),
                precision: ratio(tp, tp + fp),
                recall: ratio(tp, tp + fn_),
                f1: f1(tp, fp, fn_),
                support: tp + fn_,
            }
        })
        .collect();
    Ok(ClassificationReport {
        nodes: mask.len(),
        micro_f1: micro,
        macro_f1: macro_,
        accuracy: acc,
        per_class,
    })
}

/// K-means on the embedding rows of all labeled target nodes with one cluster per
/// class; NMI and ARI are averaged over the restarts.
pub fn cluster_report(
    g: &HeteroGraph,
    z: &DenseMatrix,
    restarts: usize,
    seed: u64,
) -> Result<ClusterReport, EvalError> {
    let nodes = g.labeled_nodes();
    if nodes.is_empty() {
        return Err(EvalError::NoLabeledNodes);
    }
    let truth = Partition(
        nodes
            .iter()
            .map(|&i| g.label(i).expect("labeled"))
            .collect(),
    );
    let points = z.select_rows(&nodes);
    let result = kmeans(&points, g.num_classes(), restarts, seed)?;
    let mut nmi_runs = Vec::with_capacity(restarts);
    let mut ari_runs = Vec::with_capacity(restarts);
    for run in &result.runs {
        nmi_runs.push(nmi(&run.partition, &truth)?);
        ari_runs.push(ari(&run.partition, &truth)?);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(ClusterReport {
        nodes: nodes.len(),
        clusters: g.num_classes(),
        nmi: mean(&nmi_runs),
        ari: mean(&ari_runs),
        nmi_runs,
        ari_runs,
        best_restart: result.best,
    })
}

/// Test-split classification plus clustering, seeded from the model's config.
pub fn evaluate(
    g: &HeteroGraph,
    model: &TrainedModel,
    restarts: usize,
) -> Result<MetricsReport, EvalError> {
    let test = g.nodes_in(Split::Test);
    let cls = classification_report(g, &model.embedding, &test)?;
    let clu = cluster_report(g, &model.embedding, restarts, model.config.seed)?;
    Ok(MetricsReport::new(model)
        .with_classification(cls)
        .with_clustering(clu))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub p: f64,
    pub report: MetricsReport,
}

/// One full train and evaluation per `k`, run in parallel, returned in input order.
pub fn sweep_k(
    g: &HeteroGraph,
    cfg: &TrainConfig,
    k_values: &[usize],
    restarts: usize,
) -> Result<Vec<SweepRow>, EvalError> {
    k_values
        .par_iter()
        .map(|&k| {
            let cfg = TrainConfig { k, ..cfg.clone() };
            let model = train_with_dilation(g, &cfg)?;
            Ok(SweepRow {
                k,
                p: cfg.dilate_p,
                report: evaluate(g, &model, restarts)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationRow {
    pub p: f64,
    /// Means over seeds.
    pub mean: Scores,
    pub sd: Scores,
    /// `100 · mean / baseline mean`.
    pub relative: Scores,
    /// `100 · sd / baseline mean`.
    pub relative_sd: Scores,
    pub per_seed: Vec<Scores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationStudy {
    pub k: usize,
    pub q: usize,
    pub seeds: Vec<u64>,
    pub baseline: DilationRow,
    pub rows: Vec<DilationRow>,
}

fn summarize(p: f64, per_seed: Vec<Scores>, baseline: Option<&Scores>) -> DilationRow {
    let n = per_seed.len() as f64;
    let mut mean = Scores::default();
    for s in &per_seed {
        mean = mean.zip(s, |a, b| a + b / n);
    }
    let mut var = Scores::default();
    for s in &per_seed {
        var = var.zip(&s.zip(&mean, |x, m| (x - m) * (x - m)), |a, b| a + b / n);
    }
    let sd = var.zip(&var, |v, _| v.sqrt());
    let base = baseline.copied().unwrap_or(mean);
    DilationRow {
        p,
        mean,
        sd,
        relative: mean.zip(&base, |m, b| 100.0 * m / b),
        relative_sd: sd.zip(&base, |s, b| 100.0 * s / b),
        per_seed,
    }
}

/// Undilated baseline and one dilated run per `(p, seed)`, compared as percentages
/// of the baseline means.
pub fn dilation_study(
    g: &HeteroGraph,
    cfg: &TrainConfig,
    p_values: &[f64],
    seeds: &[u64],
    restarts: usize,
) -> Result<DilationStudy, EvalError> {
    let mut jobs: Vec<(f64, u64)> = seeds.iter().map(|&s| (0.0, s)).collect();
    for &p in p_values.iter().filter(|&&p| p != 0.0) {
        jobs.extend(seeds.iter().map(|&s| (p, s)));
    }
    let scores: Vec<Scores> = jobs
        .par_iter()
        .map(|&(p, seed)| {
            let run_cfg = TrainConfig {
                dilate_p: p,
                seed,
                ..cfg.clone()
            };
            let model = if p == 0.0 {
                train(g, &run_cfg)?
            } else {
                train_with_dilation(g, &run_cfg)?
            };
            Ok(evaluate(g, &model, restarts)?.scores())
        })
        .collect::<Result<_, EvalError>>()?;
    let s = seeds.len();
    let baseline = summarize(0.0, scores[..s].to_vec(), None);
    let mut rows = Vec::with_capacity(p_values.len());
    let mut chunk = 1;
    for &p in p_values {
        if p == 0.0 {
            rows.push(summarize(0.0, scores[..s].to_vec(), Some(&baseline.mean)));
        } else {
            let part = scores[chunk * s..(chunk + 1) * s].to_vec();
            rows.push(summarize(p, part, Some(&baseline.mean)));
            chunk += 1;
        }
    }
    Ok(DilationStudy {
        k: cfg.k,
        q: cfg.dilate_q,
        seeds: seeds.to_vec(),
        baseline,
        rows,
    })
}

fn write_csv(
    path: &Path,
    rows: impl Iterator<Item = (usize, f64, Scores)>,
) -> Result<(), EvalError> {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for (k, p, s) in rows {
        let _ = writeln!(
            out,
            "{k},{p},{},{},{},{}",
            s.micro_f1, s.macro_f1, s.nmi, s.ari
        );
    }
    std::fs::write(path, out).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_sweep_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<(), EvalError> {
    write_csv(
        path.as_ref(),
        rows.iter().map(|r| (r.k, r.p, r.report.scores())),
    )
}

/// Absolute means to `absolute`, percentages of the baseline to `relative`.
pub fn write_dilation_csv(
    study: &DilationStudy,
    absolute: impl AsRef<Path>,
    relative: impl AsRef<Path>,
) -> Result<(), EvalError> {
    write_csv(
        absolute.as_ref(),
        study.rows.iter().map(|r| (study.k, r.p, r.mean)),
    )?;
    write_csv(
        relative.as_ref(),
        study.rows.iter().map(|r| (study.k, r.p, r.relative)),
    )
}
