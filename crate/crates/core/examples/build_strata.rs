//! Expands a graph into k-strata matrices and writes each one to the binary cache.
//!
//! ```text
//! cargo run --release --example build_strata -- [GRAPH_DIR] [OUT_DIR]
//! ```
//!
//! `GRAPH_DIR` holds `nodes.tsv` and `edges.tsv` (plus optional `labels.tsv` and
//! `splits.tsv`). Without it the planted synthetic graph is used.

use std::time::Instant;

use hcn::graph::{base_adjacency, load_graph_with, GraphPaths, LoadOptions};
use hcn::kstrata::{expand_strata, read_strata_cache, write_strata_cache};
use hcn::synthetic::{planted_partition, PlantedConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let g = match args.next() {
        Some(dir) => load_graph_with(&GraphPaths::in_dir(dir), &LoadOptions::default())?,
        None => planted_partition(&PlantedConfig::default()),
    };
    let out = std::path::PathBuf::from(args.next().unwrap_or_else(|| "strata".into()));
    std::fs::create_dir_all(&out)?;

    let a1 = base_adjacency(&g);
    println!("{} nodes, {} edges", g.node_count(), g.edges().len());
    for k in 1..=4 {
        let start = Instant::now();
        let ak = expand_strata(&a1, k)?;
        let path = out.join(format!("strata_k{k}.bin"));
        write_strata_cache(&path, &ak)?;
        assert_eq!(read_strata_cache(&path)?, ak);
        println!(
            "k={k}: {} pairs, density {:.4}, {:.1} ms -> {}",
            ak.pair_count(),
            ak.density(),
            start.elapsed().as_secs_f64() * 1e3,
            path.display()
        );
    }
    Ok(())
}
