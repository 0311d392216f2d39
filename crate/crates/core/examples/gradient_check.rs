//! Compares backpropagated gradients of the masked loss with central finite differences.
//!
//! ```text
//! cargo run --example gradient_check
//! ```

use hcn::graph::{base_adjacency, Split};
use hcn::kstrata::{expand_strata, normalize};
use hcn::model::{loss_and_gradients, ModelParams, TrainConfig};
use hcn::synthetic::{planted_partition, PlantedConfig, TargetSpec};

fn main() {
    let g = planted_partition(&PlantedConfig {
        targets: TargetSpec {
            targets: 12,
            feature_dim: 3,
            train: 6,
            val: 3,
            test: 3,
            ..TargetSpec::default()
        },
        attributes_per_class: 3,
        links_per_target: 2,
        ..PlantedConfig::default()
    });
    let cfg = TrainConfig {
        hidden: 6,
        fused_width: Some(4),
        ..TrainConfig::default()
    };
    let adj = normalize(&expand_strata(&base_adjacency(&g), cfg.k).unwrap()).unwrap();
    let params = ModelParams::init(&g, &cfg).unwrap();
    let labels = g.dense_labels();
    let mask = g.nodes_in(Split::Train);
    let loss = |p: &ModelParams| {
        loss_and_gradients(&g, &adj, p, &labels, &mask, None)
            .unwrap()
            .0
    };
    let (value, grads) = loss_and_gradients(&g, &adj, &params, &labels, &mask, None).unwrap();
    println!("loss {value:.6}");

    let eps = 1e-6;
    for (t, analytic) in grads.iter().enumerate() {
        let mut worst = 0.0f64;
        for idx in 0..analytic.as_slice().len() {
            let mut plus = params.clone();
            plus.tensors_mut()[t].as_mut_slice()[idx] += eps;
            let mut minus = params.clone();
            minus.tensors_mut()[t].as_mut_slice()[idx] -= eps;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * eps);
            let a = analytic.as_slice()[idx];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6));
        }
        let (r, c) = analytic.shape();
        println!("tensor {t} ({r}x{c}): max relative error {worst:.2e}");
    }
}
