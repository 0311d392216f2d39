//! Averages dilated runs over several seeds and compares them with the undilated baseline.
//!
//! ```text
//! cargo run --release --example dilation_study -- [OUT_DIR]
//! ```

use std::path::PathBuf;

use hcn::eval::{dilation_study, write_dilation_csv};
use hcn::model::TrainConfig;
use hcn::synthetic::{planted_partition, PlantedConfig};

fn main() -> anyhow::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    std::fs::create_dir_all(&out)?;
    let g = planted_partition(&PlantedConfig::default());
    let cfg = TrainConfig {
        max_epochs: 200,
        ..TrainConfig::default()
    };
    let study = dilation_study(&g, &cfg, &[0.0, 30.0, 50.0], &[0, 1, 2, 3, 4], 10)?;

    println!("   p        micro          macro            nmi            ari");
    for r in &study.rows {
        let (m, s) = (r.relative.as_array(), r.relative_sd.as_array());
        let cells: Vec<String> = m
            .iter()
            .zip(s)
            .map(|(m, s)| format!("{m:6.1}%±{s:4.1}"))
            .collect();
        println!("{:>4}  {}", r.p, cells.join("  "));
    }
    write_dilation_csv(
        &study,
        out.join("dilation_absolute.csv"),
        out.join("dilation_relative.csv"),
    )?;
    Ok(())
}
