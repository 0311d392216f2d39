//! Projects per-type raw features of different widths into one shared space.
//!
//! ```text
//! cargo run --example fuse_features
//! ```

use hcn::features::{fuse, init_transforms};
use hcn::synthetic::toy_graph;

fn main() {
    let g = toy_graph();
    let transforms = init_transforms(&g, 4, 0);
    for (t, m) in transforms.matrices().iter().enumerate() {
        let block = g.block(t);
        println!(
            "{:<10} {} nodes, raw width {}{} -> M is {}x{}",
            g.type_name(t),
            block.nodes.len(),
            block.features.cols(),
            if block.one_hot { " (one-hot)" } else { "" },
            m.rows(),
            m.cols()
        );
    }
    let fused = fuse(&g, &transforms).unwrap();
    for i in 0..g.node_count() {
        let row: Vec<String> = fused
            .matrix
            .row(i)
            .iter()
            .map(|v| format!("{v:+.3}"))
            .collect();
        println!("{:<3} [{}]", g.node_id(i), row.join(" "));
    }
}
