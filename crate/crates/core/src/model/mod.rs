//! The convolution stack over a normalized k-strata adjacency, and its training loop.
//!
//! ```text
//! H¹ = relu(Â X' W⁰), …, Z = Â H^{h-1} W^{h-1}
//! ```
//!
//! `X'` is recomputed from the raw blocks every step so the fusion transforms
//! train jointly with the layer weights.

mod checkpoint;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::features::{
    fuse_on_tape, glorot_uniform, init_transforms_with, FeatureError, FusedFeatures, TypeTransforms,
};
use crate::graph::{base_adjacency, HeteroGraph, Split, StrataMatrix};
use crate::kstrata::{dilate, expand_strata, normalize, NormalizedAdjacency, StrataError};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::tensor::{masked_cross_entropy, AdamState, DenseMatrix, Tape, TensorError, Var};

pub use checkpoint::{
    load_model, model_from_bytes, model_to_bytes, save_model, write_embedding, CheckpointError,
};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("graph has no labeled training nodes")]
    NoTrainingNodes,
    #[error("graph has no classes")]
    NoClasses,
    #[error("prediction mask is empty")]
    EmptyMask,
    #[error("loss became non-finite at epoch {0}")]
    NonFinite(usize),
    #[error("node {0} is not of the target type")]
    NotTarget(usize),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Strata(#[from] StrataError),
}

/// Hyper-parameters for one run. Defaults are the published settings: two layers,
/// 64 hidden units, lr 0.01, weight decay 5e-4, dropout 0.5, patience 100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub k: usize,
    pub hidden: usize,
    /// Number of graph-convolution layers `h`.
    pub layers: usize,
    /// Fused width `F'`; `None` ties it to `hidden`.
    pub fused_width: Option<usize>,
    pub lr: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Dilation percentage; 0 disables dilation.
    pub dilate_p: f64,
    /// Epochs between re-drops.
    pub dilate_q: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            k: 2,
            hidden: 64,
            layers: 2,
            fused_width: None,
            lr: 0.01,
            weight_decay: 5e-4,
            dropout: 0.5,
            max_epochs: 1000,
            patience: 100,
            seed: 0,
            dilate_p: 0.0,
            dilate_q: 20,
        }
    }
}

impl TrainConfig {
    pub fn fused(&self) -> usize {
        self.fused_width.unwrap_or(self.hidden)
    }

    /// Every violated constraint, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.k < 1 {
            out.push("k must be >= 1".to_string());
        }
        if self.hidden < 1 {
            out.push("hidden must be >= 1".to_string());
        }
        if self.layers < 1 {
            out.push("layers must be >= 1".to_string());
        }
        if self.fused_width == Some(0) {
            out.push("fused width must be >= 1".to_string());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            out.push(format!("learning rate {} must be positive", self.lr));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            out.push(format!("weight decay {} must be >= 0", self.weight_decay));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            out.push(format!("dropout {} must be in [0, 1)", self.dropout));
        }
        if self.patience < 1 {
            out.push("patience must be >= 1".to_string());
        }
        if !(0.0..100.0).contains(&self.dilate_p) {
            out.push(format!(
                "dilation percentage {} must be in [0, 100)",
                self.dilate_p
            ));
        }
        if self.dilate_q < 1 {
            out.push("dilation period must be >= 1".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Config(p))
        }
    }
}

/// Fusion transforms plus the layer weights `W⁰ … W^{h-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub transforms: TypeTransforms,
    pub layers: Vec<DenseMatrix>,
    pub dropout: f64,
}

impl ModelParams {
    /// Glorot-uniform initialization from the init stream of `cfg.seed`.
    pub fn init(g: &HeteroGraph, cfg: &TrainConfig) -> Result<Self, ModelError> {
        let classes = g.num_classes();
        if classes == 0 {
            return Err(ModelError::NoClasses);
        }
        let mut rng = stream_rng(cfg.seed, Stream::Init, 0);
        let transforms = init_transforms_with(g, cfg.fused(), &mut rng);
        let mut widths = vec![cfg.fused()];
        widths.extend(std::iter::repeat_n(cfg.hidden, cfg.layers - 1));
        widths.push(classes);
        let layers = widths
            .windows(2)
            .map(|w| glorot_uniform(w[0], w[1], &mut rng))
            .collect();
        Ok(Self {
            transforms,
            layers,
            dropout: cfg.dropout,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Transforms first, then layers.
    pub fn tensors(&self) -> Vec<&DenseMatrix> {
        self.transforms
            .matrices()
            .iter()
            .chain(self.layers.iter())
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix> {
        self.transforms
            .matrices_mut()
            .iter_mut()
            .chain(self.layers.iter_mut())
            .collect()
    }

    fn check_chain(&self) -> Result<(), ModelError> {
        let mut width = self.transforms.width();
        for w in &self.layers {
            if w.rows() != width {
                return Err(TensorError::Shape {
                    op: "layer chain",
                    lhs: (0, width),
                    rhs: w.shape(),
                }
                .into());
            }
            width = w.cols();
        }
        Ok(())
    }
}

fn dropout_mask<R: Rng + ?Sized>(rows: usize, cols: usize, rate: f64, rng: &mut R) -> DenseMatrix {
    let keep = 1.0 / (1.0 - rate);
    let data = (0..rows * cols)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect();
    DenseMatrix::from_vec(rows, cols, data).expect("length matches shape")
}

/// Records the layer stack on `tape` starting from `input`. Dropout is applied to
/// each layer's input when `dropout_rng` is given.
fn record_layers<'a>(
    tape: &mut Tape<'a>,
    adj: &'a NormalizedAdjacency,
    input: Var,
    layer_vars: &[Var],
    rate: f64,
    mut dropout_rng: Option<&mut dyn rand::RngCore>,
) -> Result<Var, ModelError> {
    let mut h = input;
    let last = layer_vars.len() - 1;
    for (l, &w) in layer_vars.iter().enumerate() {
        if let Some(rng) = dropout_rng.as_deref_mut() {
            if rate > 0.0 {
                let (r, c) = tape.value(h).shape();
                let mask = dropout_mask(r, c, rate, rng);
                h = tape.mask(h, mask)?;
            }
        }
        let hw = tape.matmul(h, w)?;
        h = tape.spmm(adj.matrix(), hw)?;
        if l != last {
            h = tape.relu(h)?;
        }
    }
    Ok(h)
}

/// Forward pass from already fused features. `dropout_rng = None` is evaluation mode.
pub fn forward(
    adj: &NormalizedAdjacency,
    x_fused: &FusedFeatures,
    params: &ModelParams,
    dropout_rng: Option<&mut dyn rand::RngCore>,
) -> Result<DenseMatrix, ModelError> {
    params.check_chain()?;
    if params.layers.is_empty() {
        return Err(ModelError::Config(vec!["model has no layers".into()]));
    }
    let mut tape = Tape::new();
    let x = tape.constant(x_fused.matrix.clone());
    let vars: Vec<Var> = params
        .layers
        .iter()
        .map(|w| tape.constant(w.clone()))
        .collect();
    let z = record_layers(&mut tape, adj, x, &vars, params.dropout, dropout_rng)?;
    Ok(tape.value(z).clone())
}

struct Recorded<'a> {
    tape: Tape<'a>,
    params: Vec<Var>,
    output: Var,
}

fn record_full<'a>(
    g: &HeteroGraph,
    adj: &'a NormalizedAdjacency,
    params: &ModelParams,
    dropout_rng: Option<&mut dyn rand::RngCore>,
) -> Result<Recorded<'a>, ModelError> {
    params.check_chain()?;
    let mut tape = Tape::new();
    let vars: Vec<Var> = params
        .tensors()
        .into_iter()
        .map(|m| tape.param(m.clone()))
        .collect();
    let n_t = params.transforms.len();
    let x = fuse_on_tape(&mut tape, g, &params.transforms, &vars[..n_t])?;
    let output = record_layers(&mut tape, adj, x, &vars[n_t..], params.dropout, dropout_rng)?;
    Ok(Recorded {
        tape,
        params: vars,
        output,
    })
}

/// Raw features → fusion → layers, in evaluation mode.
pub fn embed(
    g: &HeteroGraph,
    adj: &NormalizedAdjacency,
    params: &ModelParams,
) -> Result<DenseMatrix, ModelError> {
    let rec = record_full(g, adj, params, None)?;
    Ok(rec.tape.value(rec.output).clone())
}

/// Summed cross-entropy on `mask` and its gradient for every parameter
/// (transforms first, then layers). Weight decay is not included here.
pub fn loss_and_gradients(
    g: &HeteroGraph,
    adj: &NormalizedAdjacency,
    params: &ModelParams,
    labels: &[usize],
    mask: &[usize],
    dropout_rng: Option<&mut dyn rand::RngCore>,
) -> Result<(f64, Vec<DenseMatrix>), ModelError> {
    let rec = record_full(g, adj, params, dropout_rng)?;
    let z = rec.tape.value(rec.output);
    let (loss, dz) = masked_cross_entropy(z, labels, mask)?;
    let mut grads = rec.tape.backward(rec.output, &dz)?;
    let out = rec
        .params
        .iter()
        .zip(params.tensors())
        .map(|(&v, p)| {
            grads
                .take(v)
                .unwrap_or_else(|| DenseMatrix::zeros(p.rows(), p.cols()))
        })
        .collect();
    Ok((loss, out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DilationEvent {
    pub epoch: usize,
    pub pairs_before: usize,
    pub pairs_after: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub dilations: Vec<DilationEvent>,
}

/// Node count, per-type node counts and class names of the graph a model was trained on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSignature {
    pub n: usize,
    pub types: Vec<(String, usize)>,
    pub classes: Vec<String>,
}

impl GraphSignature {
    pub fn of(g: &HeteroGraph) -> Self {
        Self {
            n: g.node_count(),
            types: g
                .types()
                .iter()
                .map(|t| (t.name.clone(), g.block(t.index).nodes.len()))
                .collect(),
            classes: g.class_names().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: ModelParams,
    /// Final embedding `Z`, one row per node in global order.
    pub embedding: DenseMatrix,
    pub history: TrainHistory,
    pub config: TrainConfig,
    pub signature: GraphSignature,
}

/// Trains on the k-strata adjacency of `g` without dilation.
pub fn train(g: &HeteroGraph, cfg: &TrainConfig) -> Result<TrainedModel, ModelError> {
    cfg.validate()?;
    let ak = expand_strata(&base_adjacency(g), cfg.k)?;
    let cfg = TrainConfig {
        dilate_p: 0.0,
        ..cfg.clone()
    };
    fit(g, &ak, &cfg)
}

/// Trains with online dilation: every `dilate_q` epochs a fresh `dilate_p`% of the
/// k-strata pairs is dropped from the full matrix and the result re-normalized.
pub fn train_with_dilation(g: &HeteroGraph, cfg: &TrainConfig) -> Result<TrainedModel, ModelError> {
    cfg.validate()?;
    let ak = expand_strata(&base_adjacency(g), cfg.k)?;
    fit(g, &ak, cfg)
}

/// Training loop over a precomputed strata matrix (e.g. from the cache).
/// Dilation is active iff `cfg.dilate_p > 0`.
pub fn fit(
    g: &HeteroGraph,
    ak: &StrataMatrix,
    cfg: &TrainConfig,
) -> Result<TrainedModel, ModelError> {
    cfg.validate()?;
    assert_eq!(ak.n(), g.node_count(), "strata matrix does not match graph");
    let train_mask = g.nodes_in(Split::Train);
    if train_mask.is_empty() {
        return Err(ModelError::NoTrainingNodes);
    }
    let val_mask = g.nodes_in(Split::Val);
    let labels = g.dense_labels();
    let mut params = ModelParams::init(g, cfg)?;
    let mut adam = AdamState::new(&params.tensors(), cfg.lr, cfg.weight_decay);
    let mut dropout_rng = stream_rng(cfg.seed, Stream::Dropout, 0);
    let dilating = cfg.dilate_p > 0.0;

    let mut adj = normalize(ak)?;
    let mut history = TrainHistory::default();
    let mut best_monitor = f64::INFINITY;
    let mut best: Option<(ModelParams, DenseMatrix)> = None;
    let mut since_best = 0;

    for epoch in 0..cfg.max_epochs {
        if dilating && epoch % cfg.dilate_q == 0 {
            let seed = derive_seed(cfg.seed, Stream::Dilation, epoch as u64);
            let dilated = dilate(ak, cfg.dilate_p, seed)?;
            history.dilations.push(DilationEvent {
                epoch,
                pairs_before: ak.pair_count(),
                pairs_after: dilated.pair_count(),
            });
            adj = normalize(&dilated)?;
        }

        let (train_loss, grads) = loss_and_gradients(
            g,
            &adj,
            &params,
            &labels,
            &train_mask,
            Some(&mut dropout_rng),
        )?;
        if !train_loss.is_finite() {
            return Err(ModelError::NonFinite(epoch));
        }
        {
            let grad_refs: Vec<&DenseMatrix> = grads.iter().collect();
            adam.step(&mut params.tensors_mut(), &grad_refs)?;
        }

        let z = embed(g, &adj, &params)?;
        let (val_loss, val_accuracy) = if val_mask.is_empty() {
            let (l, _) = masked_cross_entropy(&z, &labels, &train_mask)?;
            (l, accuracy(&z, &labels, &train_mask))
        } else {
            let (l, _) = masked_cross_entropy(&z, &labels, &val_mask)?;
            (l, accuracy(&z, &labels, &val_mask))
        };
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_accuracy,
        });

        if val_loss < best_monitor {
            best_monitor = val_loss;
            history.best_epoch = Some(epoch);
            best = Some((params.clone(), z));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }

    let (params, embedding) = match best {
        Some(b) => b,
        None => {
            let z = embed(g, &adj, &params)?;
            (params, z)
        }
    };
    Ok(TrainedModel {
        params,
        embedding,
        history,
        config: cfg.clone(),
        signature: GraphSignature::of(g),
    })
}

fn accuracy(z: &DenseMatrix, labels: &[usize], mask: &[usize]) -> f64 {
    let hits = mask
        .iter()
        .filter(|&&i| z.argmax_row(i) == labels[i])
        .count();
    hits as f64 / mask.len() as f64
}

/// Arg-max class of each masked row of the embedding; ties go to the lowest class.
pub fn predict(m: &TrainedModel, mask: &[usize]) -> Result<Vec<usize>, ModelError> {
    predict_from(&m.embedding, mask)
}

pub fn predict_from(z: &DenseMatrix, mask: &[usize]) -> Result<Vec<usize>, ModelError> {
    if mask.is_empty() {
        return Err(ModelError::EmptyMask);
    }
    Ok(mask.iter().map(|&i| z.argmax_row(i)).collect())
}
