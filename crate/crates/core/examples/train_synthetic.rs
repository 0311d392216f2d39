//! Trains on the planted-partition graph and reports test classification scores.
//!
//! ```text
//! cargo run --release --example train_synthetic -- [K] [SEED]
//! ```

use hcn::eval::classification_report;
use hcn::graph::Split;
use hcn::model::{train, TrainConfig};
use hcn::synthetic::{planted_partition, PlantedConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let k = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    let g = planted_partition(&PlantedConfig {
        seed,
        ..PlantedConfig::default()
    });
    let cfg = TrainConfig {
        k,
        seed,
        max_epochs: 200,
        ..TrainConfig::default()
    };
    let model = train(&g, &cfg)?;

    for e in model.history.epochs.iter().step_by(20) {
        println!(
            "epoch {:>3}  train loss {:>8.3}  val loss {:>7.3}  val acc {:.3}",
            e.epoch, e.train_loss, e.val_loss, e.val_accuracy
        );
    }
    let report = classification_report(&g, &model.embedding, &g.nodes_in(Split::Test))?;
    println!(
        "best epoch {:?}; test micro-F1 {:.4}, macro-F1 {:.4}",
        model.history.best_epoch, report.micro_f1, report.macro_f1
    );
    for c in &report.per_class {
        println!("  {c:?}");
    }
    Ok(())
}
