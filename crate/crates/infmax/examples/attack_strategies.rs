//! Every selection strategy side by side on one blockmodel graph, under
//! the same budget and degree cap.
//!
//! ```bash
//! cargo run -p infmax --example attack_strategies
//! ```

use infmax::strategies::{select, SelectionConstraint, Strategy};
use infmax::synth::{generate_sbm, SBMConfig};

fn main() -> infmax::Result<()> {
    let g = generate_sbm(&SBMConfig {
        n_communities: 4,
        nodes_per_community: 50,
        p_in: 0.1,
        p_out: 0.01,
        feature_dim: 16,
        signal: 1.0,
        noise_sd: 1.0,
        seed: 42,
    })?;
    // Five seeds, none from the top 10% by degree: the attacker cannot
    // touch the obvious hubs.
    let constraint = SelectionConstraint::percentile(5, 0.1);
    println!(
        "{} nodes, {} edges, budget {}, degree cap at the {} percentile",
        g.n(),
        g.n_edges(),
        constraint.r,
        0.1
    );

    let strategies = [
        Strategy::InfmaxUnif { l_walk: 4, a: 0.01 },
        Strategy::InfmaxNorm { l_walk: 4, sigma: 0.01 },
        Strategy::Rwcs { l_walk: 4 },
        Strategy::GcRwcs { l_walk: 4, l_top: 30, k_hops: 1 },
        Strategy::Degree,
        Strategy::Betweenness,
        Strategy::Pagerank,
        Strategy::Random { seed: 1 },
    ];

    println!("\n{:>12}  selected nodes", "strategy");
    for strategy in strategies {
        let plan = select(&g, &constraint, &strategy)?;
        let picks: Vec<&str> = plan.selected.iter().map(|&i| g.node_id(i)).collect();
        println!("{:>12}  {}", plan.strategy.name(), picks.join(" "));
        if let (Some(first), Some(last)) = (plan.trace.first(), plan.trace.last()) {
            println!("{:>12}  objective {first:.3} -> {last:.3}", "");
        }
    }
    Ok(())
}
