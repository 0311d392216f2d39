//! Model checkpoints, little-endian throughout:
//!
//! ```text
//! b"HCNMODEL" | version: u16 | meta_len: u64 | meta: JSON
//! | transforms: matrices | layers: matrices | embedding: matrix
//!
//! matrices = count: u64, matrix*
//! matrix   = rows: u64 | cols: u64 | data: f64[rows * cols]
//! ```
//!
//! `meta` carries the config, graph signature, dropout rate and training history.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GraphSignature, ModelParams, TrainConfig, TrainHistory, TrainedModel};
use crate::features::TypeTransforms;
use crate::graph::HeteroGraph;
use crate::tensor::DenseMatrix;

const MAGIC: &[u8; 8] = b"HCNMODEL";
const VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint: bad magic bytes")]
    BadMagic,
    #[error("checkpoint: unsupported version {0}")]
    Version(u16),
    #[error("checkpoint: truncated")]
    Truncated,
    #[error("checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint was trained on a different graph: {0}")]
    GraphMismatch(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Serialize, Deserialize)]
struct Meta {
    config: TrainConfig,
    signature: GraphSignature,
    dropout: f64,
    history: TrainHistory,
}

fn put_matrix(out: &mut Vec<u8>, m: &DenseMatrix) {
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn put_matrices(out: &mut Vec<u8>, ms: &[DenseMatrix]) {
    out.extend_from_slice(&(ms.len() as u64).to_le_bytes());
    for m in ms {
        put_matrix(out, m);
    }
}

pub fn model_to_bytes(m: &TrainedModel) -> Vec<u8> {
    let meta = Meta {
        config: m.config.clone(),
        signature: m.signature.clone(),
        dropout: m.params.dropout,
        history: m.history.clone(),
    };
    let json = serde_json::to_vec(&meta).expect("meta is serializable");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    put_matrices(&mut out, m.params.transforms.matrices());
    put_matrices(&mut out, &m.params.layers);
    put_matrix(&mut out, &m.embedding);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self
            .pos
            .checked_add(len)
            .ok_or(CheckpointError::Truncated)?;
        let s = self
            .buf
            .get(self.pos..end)
            .ok_or(CheckpointError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<usize, CheckpointError> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| CheckpointError::Corrupt(format!("length {v} too large")))
    }

    fn matrix(&mut self) -> Result<DenseMatrix, CheckpointError> {
        let rows = self.u64()?;
        let cols = self.u64()?;
        let len = rows
            .checked_mul(cols)
            .and_then(|l| l.checked_mul(8))
            .ok_or(CheckpointError::Truncated)?;
        let bytes = self.take(len)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(DenseMatrix::from_vec(rows, cols, data).expect("length checked"))
    }

    fn matrices(&mut self) -> Result<Vec<DenseMatrix>, CheckpointError> {
        let count = self.u64()?;
        if count > self.buf.len() {
            return Err(CheckpointError::Truncated);
        }
        (0..count).map(|_| self.matrix()).collect()
    }
}

pub fn model_from_bytes(buf: &[u8]) -> Result<TrainedModel, CheckpointError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8).map_err(|_| CheckpointError::BadMagic)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let meta_len = r.u64()?;
    let meta: Meta = serde_json::from_slice(r.take(meta_len)?)
        .map_err(|e| CheckpointError::Corrupt(format!("metadata: {e}")))?;
    let transforms =
        TypeTransforms::new(r.matrices()?).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
    let layers = r.matrices()?;
    let embedding = r.matrix()?;
    if r.pos != buf.len() {
        return Err(CheckpointError::Corrupt("trailing bytes".into()));
    }
    if layers.is_empty() {
        return Err(CheckpointError::Corrupt("no layers".into()));
    }
    if embedding.rows() != meta.signature.n {
        return Err(CheckpointError::Corrupt(format!(
            "embedding has {} rows for {} nodes",
            embedding.rows(),
            meta.signature.n
        )));
    }
    Ok(TrainedModel {
        params: ModelParams {
            transforms,
            layers,
            dropout: meta.dropout,
        },
        embedding,
        history: meta.history,
        config: meta.config,
        signature: meta.signature,
    })
}

pub fn save_model(m: &TrainedModel, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
    let path = path.as_ref();
    std::fs::write(path, model_to_bytes(m)).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel, CheckpointError> {
    let path = path.as_ref();
    let buf = std::fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    model_from_bytes(&buf)
}

impl TrainedModel {
    /// Errors unless `g` has the node count, type sizes and classes seen at training time.
    pub fn check_graph(&self, g: &HeteroGraph) -> Result<(), CheckpointError> {
        let sig = GraphSignature::of(g);
        if sig.n != self.signature.n {
            return Err(CheckpointError::GraphMismatch(format!(
                "{} nodes, expected {}",
                sig.n, self.signature.n
            )));
        }
        if sig.types != self.signature.types {
            return Err(CheckpointError::GraphMismatch(format!(
                "node types {:?}, expected {:?}",
                sig.types, self.signature.types
            )));
        }
        if sig.classes != self.signature.classes {
            return Err(CheckpointError::GraphMismatch(format!(
                "classes {:?}, expected {:?}",
                sig.classes, self.signature.classes
            )));
        }
        Ok(())
    }
}

/// One line per node: `node_id\tz_1\t…\tz_C`.
pub fn write_embedding(
    g: &HeteroGraph,
    z: &DenseMatrix,
    path: impl AsRef<Path>,
) -> Result<(), CheckpointError> {
    let path = path.as_ref();
    let mut out = String::new();
    for i in 0..z.rows() {
        out.push_str(g.node_id(i));
        for v in z.row(i) {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })
}
