//! Trains a 3-strata model on a real heterogeneous dataset in the TSV layout.
//!
//! ```text
//! cargo run --release --example dblp_check -- DATA_DIR [TARGET_TYPE] [FOLDED:HOST,...]
//! ```
//!
//! `DATA_DIR` must contain `nodes.tsv`, `edges.tsv`, `labels.tsv` and `splits.tsv`.

use hcn::eval::evaluate;
use hcn::graph::{load_graph_with, GraphPaths, LoadOptions};
use hcn::model::{train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(dir) = args.next() else {
        anyhow::bail!("usage: dblp_check DATA_DIR [TARGET_TYPE] [FOLDED:HOST,...]");
    };
    let target_type = args.next();
    let fold = args
        .next()
        .map(|s| {
            s.split(',')
                .filter_map(|p| p.split_once(':'))
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect()
        })
        .unwrap_or_default();
    let g = load_graph_with(
        &GraphPaths::in_dir(&dir),
        &LoadOptions { target_type, fold },
    )?;
    println!(
        "{} nodes, {} edges, {} classes, types: {}",
        g.node_count(),
        g.edges().len(),
        g.num_classes(),
        g.types()
            .iter()
            .map(|t| t.name.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    );
    let model = train(
        &g,
        &TrainConfig {
            k: 3,
            ..TrainConfig::default()
        },
    )?;
    let s = evaluate(&g, &model, 10)?.scores();
    println!(
        "micro-F1 {:.4}  macro-F1 {:.4}  nmi {:.4}  ari {:.4}",
        s.micro_f1, s.macro_f1, s.nmi, s.ari
    );
    Ok(())
}
