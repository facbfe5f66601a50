//! Random-walk influence basics: the self-inclusive transition matrix,
//! multi-step walk columns, and the per-target load of a seed set.
//!
//! ```bash
//! cargo run -p infmax --example random_walk_influence
//! ```

use infmax::graph::{build_graph, influence_columns, transition_matrix};

fn main() -> infmax::Result<()> {
    // A hub (h) joined to four spokes, with a tail hanging off one spoke:
    //
    //   s0   s1
    //     \ /
    //      h --- s2 --- t0 --- t1
    //     /
    //   s3
    let edges: Vec<(String, String)> = [
        ("h", "s0"),
        ("h", "s1"),
        ("h", "s2"),
        ("h", "s3"),
        ("s2", "t0"),
        ("t0", "t1"),
    ]
    .iter()
    .map(|(u, v)| (u.to_string(), v.to_string()))
    .collect();
    let g = build_graph(&edges, None, None)?;
    let walk = transition_matrix(&g);

    println!("{} nodes, {} edges", g.n(), g.n_edges());
    println!("\nOne-step transition rows (each row sums to 1):");
    for i in 0..g.n() {
        let (cols, vals) = walk.row(i);
        let row: Vec<String> = cols
            .iter()
            .zip(vals)
            .map(|(&j, p)| format!("{}:{:.3}", g.node_id(j), p))
            .collect();
        println!("  {:>3} -> {}", g.node_id(i), row.join("  "));
    }

    // Column i of the L-step matrix: how much probability mass each
    // node sends to i after L lazy steps. This is the influence node i
    // exerts when its features are perturbed.
    let hub = g.index_of("h").expect("hub exists");
    let tail = g.index_of("t1").expect("tail exists");
    println!("\nFour-step walk columns (probability of landing on the node):");
    for &(name, idx) in &[("h", hub), ("t1", tail)] {
        let col = walk.walk_column(idx, 4);
        let mass: f64 = col.iter().sum();
        let shown: Vec<String> = col
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 1e-12)
            .map(|(j, v)| format!("{}:{:.4}", g.node_id(j), v))
            .collect();
        println!("  column {name}: total mass {mass:.4}");
        println!("    {}", shown.join("  "));
    }

    // Loads add linearly over a seed set; the cache reuses columns.
    let seeds = vec![hub, tail];
    let influence = influence_columns(&walk, &seeds, 4)?;
    let load = influence.load(&seeds)?;
    println!("\nLoad of seed set {{h, t1}} on every node:");
    for (j, l) in load.iter().enumerate() {
        println!("  {:>3}  {l:.4}", g.node_id(j));
    }
    Ok(())
}
