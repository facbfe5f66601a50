//! Classical centrality measures on a small graph with an obvious
//! bottleneck: degree, shortest-path betweenness, and PageRank.
//!
//! ```bash
//! cargo run -p infmax --example centrality_scores
//! ```

use infmax::centrality::{
    betweenness_centrality, degree_centrality, pagerank_centrality, PageRankConfig,
};
use infmax::graph::build_graph;

fn main() -> infmax::Result<()> {
    // Two tight clusters joined by a single bridge node. Degree barely
    // notices the bridge; betweenness makes it the clear winner.
    //
    //   a0--a1--a2 (triangle)   bridge   b0--b1--b2 (triangle)
    let mut edges = Vec::new();
    for cluster in ["a", "b"] {
        for i in 0..3 {
            for j in (i + 1)..3 {
                edges.push((format!("{cluster}{i}"), format!("{cluster}{j}")));
            }
        }
    }
    edges.push(("a0".into(), "bridge".into()));
    edges.push(("bridge".into(), "b0".into()));
    let g = build_graph(&edges, None, None)?;

    let degree = degree_centrality(&g);
    let betweenness = betweenness_centrality(&g);
    let pagerank = pagerank_centrality(&g, &PageRankConfig::default())?;

    println!("{:>8}  {:>8}  {:>12}  {:>9}", "node", "degree", "betweenness", "pagerank");
    for i in 0..g.n() {
        println!(
            "{:>8}  {:>8.4}  {:>12.4}  {:>9.4}",
            g.node_id(i),
            degree.values[i],
            betweenness.values[i],
            pagerank.values[i]
        );
    }

    let total: f64 = pagerank.values.iter().sum();
    println!("\npagerank total mass: {total:.12}");

    let top = |values: &[f64]| {
        let best = (0..g.n())
            .max_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap())
            .unwrap();
        g.node_id(best).to_string()
    };
    println!("highest degree:      {}", top(&degree.values));
    println!("highest betweenness: {}", top(&betweenness.values));
    println!("highest pagerank:    {}", top(&pagerank.values));
    Ok(())
}
