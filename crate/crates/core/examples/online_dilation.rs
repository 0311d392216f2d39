//! Trains with a fresh random subset of strata pairs dropped every q epochs.
//!
//! ```text
//! cargo run --release --example online_dilation -- [P] [Q]
//! ```

use hcn::eval::evaluate;
use hcn::model::{train, train_with_dilation, TrainConfig};
use hcn::synthetic::{planted_partition, PlantedConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let p = args.next().map(|s| s.parse()).transpose()?.unwrap_or(30.0);
    let q = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);

    let g = planted_partition(&PlantedConfig::default());
    let cfg = TrainConfig {
        dilate_p: p,
        dilate_q: q,
        max_epochs: 200,
        ..TrainConfig::default()
    };
    let dilated = train_with_dilation(&g, &cfg)?;
    for d in &dilated.history.dilations {
        println!(
            "epoch {:>3}: {} -> {} pairs",
            d.epoch, d.pairs_before, d.pairs_after
        );
    }

    let plain = train(&g, &cfg)?;
    for (name, m) in [("p=0", &plain), ("dilated", &dilated)] {
        let s = evaluate(&g, m, 10)?.scores();
        println!(
            "{name:<8} micro {:.3} macro {:.3} nmi {:.3} ari {:.3}",
            s.micro_f1, s.macro_f1, s.nmi, s.ari
        );
    }
    Ok(())
}
