//! How stable are the flip thresholds across retrainings? Sample theta
//! for every node over repeated independently seeded trainings and
//! check the shape of each node's distribution.
//!
//! ```bash
//! cargo run -p infmax --example theta_histogram
//! ```

use infmax::surrogate::theta_histogram;
use infmax::synth::{generate_sbm, SBMConfig};
use infmax::victim::TrainConfig;

fn main() -> infmax::Result<()> {
    let g = generate_sbm(&SBMConfig {
        n_communities: 2,
        nodes_per_community: 25,
        p_in: 0.2,
        p_out: 0.02,
        feature_dim: 8,
        signal: 1.5,
        noise_sd: 0.5,
        seed: 4,
    })?;
    let (x, y) = g.labeled_features()?;
    let x = x.to_owned();
    let y = y.to_vec();
    let mut epsilon = vec![0.0; 8];
    epsilon[0] = 10.0;
    epsilon[1] = -10.0;

    let config = TrainConfig { hidden: 8, epochs: 80, ..TrainConfig::default() };
    let trials = 24;
    let hist = theta_histogram(&g, &x, &y, &epsilon, &config, trials, 6)?;
    println!("{trials} trainings, {} diverged", hist.n_failed);

    // A few nodes in detail: finite thresholds mean the node can flip,
    // negative ones mean some retrained model already misclassifies it.
    for i in [0, 10, 30] {
        let finite: Vec<f64> =
            hist.samples[i].iter().copied().filter(|v| v.is_finite()).collect();
        let shape = match hist.monotone[i] {
            Some(true) => "density non-increasing",
            Some(false) => "density has a bump",
            None => "too few finite samples to bin",
        };
        println!(
            "\nnode {}: {} of {} samples finite ({shape})",
            g.node_id(i),
            finite.len(),
            hist.samples[i].len()
        );
        let shown: Vec<String> = finite.iter().take(8).map(|v| format!("{v:.3}")).collect();
        println!("  first samples: {}", shown.join(" "));
    }

    match hist.monotone_fraction() {
        Some(f) => println!(
            "\n{:.0}% of binnable nodes have a non-increasing positive density",
            100.0 * f
        ),
        None => println!("\nno node had enough finite samples to bin"),
    }
    Ok(())
}
