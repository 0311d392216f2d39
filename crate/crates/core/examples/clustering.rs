//! Clusters learned embeddings with k-means and scores them against the labels.
//!
//! ```text
//! cargo run --release --example clustering -- [RESTARTS]
//! ```

use hcn::eval::{ari, kmeans, nmi, Partition};
use hcn::model::{train, TrainConfig};
use hcn::synthetic::{planted_partition, PlantedConfig};

fn main() -> anyhow::Result<()> {
    let restarts = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(10);
    let g = planted_partition(&PlantedConfig::default());
    let model = train(
        &g,
        &TrainConfig {
            max_epochs: 200,
            ..TrainConfig::default()
        },
    )?;

    let nodes = g.labeled_nodes();
    let truth = Partition(nodes.iter().map(|&i| g.label(i).unwrap()).collect());
    let points = model.embedding.select_rows(&nodes);
    let result = kmeans(&points, g.num_classes(), restarts, 0)?;
    for (r, run) in result.runs.iter().enumerate() {
        println!(
            "restart {r:>2}: {:>3} iterations, wcss {:>10.3}, nmi {:.4}, ari {:.4}",
            run.iterations,
            run.wcss,
            nmi(&run.partition, &truth)?,
            ari(&run.partition, &truth)?
        );
    }
    println!("lowest wcss: restart {}", result.best);
    Ok(())
}
