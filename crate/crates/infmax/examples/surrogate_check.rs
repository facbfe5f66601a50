//! The linearized surrogate in action: per-node flip thresholds and the
//! dual-path check that "forward pass flips" agrees with "load beats
//! threshold".
//!
//! ```bash
//! cargo run -p infmax --example surrogate_check
//! ```

use infmax::graph::build_graph;
use infmax::rng::rng_from_seed;
use infmax::surrogate::{compute_theta, predictions, verify_equivalence, SurrogateModel};
use ndarray::Array2;
use rand::RngExt;

fn main() -> infmax::Result<()> {
    // A random 12-node graph with 4 features and 3 classes.
    let mut rng = rng_from_seed(3);
    let n = 12;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(0.3) {
                edges.push((format!("n{i:02}"), format!("n{j:02}")));
            }
        }
    }
    let g = build_graph(&edges, None, None)?;
    let x = Array2::from_shape_fn((g.n(), 4), |_| rng.random_range(-1.0..1.0));
    let w1 = Array2::from_shape_fn((5, 4), |_| rng.random_range(-1.0..1.0));
    let w2 = Array2::from_shape_fn((3, 5), |_| rng.random_range(-1.0..1.0));
    let model = SurrogateModel::new(vec![w1, w2], 1.0)?;

    // Labels are the surrogate's own clean predictions, so every node
    // starts correctly classified.
    let logits = model.expected_forward(&g, &x)?;
    let y = predictions(&logits);
    let epsilon = vec![2.0, -1.0, 0.5, 1.5];

    let report = compute_theta(&model, &g, &x, &y, &epsilon)?;
    println!("per-node flip thresholds:");
    for i in 0..g.n() {
        println!(
            "  {}  theta {:>8.4}  competing class {}  margin {:.4}  alignment {:>7.4}",
            g.node_id(i),
            report.theta[i],
            report.khat[i],
            report.logit_margin[i],
            report.denom[i]
        );
    }

    // Perturb three seeds and compare both routes to "who flips".
    let s = vec![0, 4, 7];
    let check = verify_equivalence(&model, &g, &x, &y, &epsilon, &s, 2)?;
    println!("\nseed set {s:?}:");
    println!("  flips via forward pass:  {}", check.flips_forward);
    println!("  flips via thresholds:    {}", check.flips_threshold);
    println!("  numerical ties excluded: {}", check.ties.len());
    println!("  disagreements:           {}", check.violations.len());
    println!("  worst linearity error:   {:.2e}", check.max_linearity_error);
    Ok(())
}
