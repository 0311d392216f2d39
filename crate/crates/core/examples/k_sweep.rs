//! Sweeps the strata order on a graph whose class signal sits three hops from the targets.
//!
//! ```text
//! cargo run --release --example k_sweep -- [OUT_CSV]
//! ```

use hcn::eval::{sweep_k, write_sweep_csv};
use hcn::model::TrainConfig;
use hcn::synthetic::{relay_graph, RelayConfig};

fn main() -> anyhow::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "sweep_k.csv".into());
    let g = relay_graph(&RelayConfig::default());
    let cfg = TrainConfig {
        max_epochs: 200,
        ..TrainConfig::default()
    };
    let rows = sweep_k(&g, &cfg, &[1, 2, 3, 4, 5], 10)?;
    println!(" k  micro  macro    nmi    ari");
    for r in &rows {
        let s = r.report.scores();
        println!(
            "{:>2}  {:.3}  {:.3}  {:.3}  {:.3}",
            r.k, s.micro_f1, s.macro_f1, s.nmi, s.ari
        );
    }
    write_sweep_csv(&rows, &out)?;
    println!("wrote {out}");
    Ok(())
}
