//! Neighborhoods of A1 in the 11-node author/paper/conference graph for growing k.
//!
//! ```text
//! cargo run --example toy_strata
//! ```

use hcn::graph::base_adjacency;
use hcn::kstrata::expand_strata;
use hcn::synthetic::toy_graph;

fn main() {
    let g = toy_graph();
    let a1 = base_adjacency(&g);
    let node = g.index_of("A1").unwrap();
    for k in 1..=3 {
        let ak = expand_strata(&a1, k).unwrap();
        let names: Vec<&str> = ak.row(node).iter().map(|&j| g.node_id(j)).collect();
        println!("k={k}: {} neighbors {{{}}}", names.len(), names.join(", "));
    }
}
