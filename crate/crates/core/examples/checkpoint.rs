//! Saves a trained model, reloads it and predicts from the stored embedding.
//!
//! ```text
//! cargo run --release --example checkpoint -- [PATH]
//! ```

use hcn::graph::Split;
use hcn::model::{load_model, predict, save_model, train, TrainConfig};
use hcn::synthetic::{planted_partition, PlantedConfig};

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "model.bin".into());
    let g = planted_partition(&PlantedConfig::default());
    let model = train(
        &g,
        &TrainConfig {
            max_epochs: 50,
            ..TrainConfig::default()
        },
    )?;
    save_model(&model, &path)?;

    let loaded = load_model(&path)?;
    loaded.check_graph(&g)?;
    assert_eq!(loaded.params, model.params);
    let test = g.nodes_in(Split::Test);
    let pred = predict(&loaded, &test)?;
    let correct = pred
        .iter()
        .zip(&test)
        .filter(|(p, &i)| g.label(i) == Some(**p))
        .count();
    println!(
        "{} bytes at {path}; {correct}/{} test nodes correct",
        std::fs::metadata(&path)?.len(),
        test.len()
    );
    Ok(())
}
