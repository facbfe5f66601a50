//! The full black-box pipeline: train proxy models, distill a shared
//! feature perturbation from their gradients, pick nodes with each
//! strategy, and measure the damage on a separately trained victim.
//!
//! ```bash
//! cargo run -p infmax --example train_and_attack
//! ```

use infmax::perturb::{build_epsilon, proxy_scores, PerturbationSpec};
use infmax::strategies::{select, SelectionConstraint, Strategy};
use infmax::synth::{generate_sbm, SBMConfig};
use infmax::victim::{evaluate_attack, random_split, train, TrainConfig};

fn main() -> infmax::Result<()> {
    let g = generate_sbm(&SBMConfig {
        n_communities: 4,
        nodes_per_community: 50,
        p_in: 0.1,
        p_out: 0.01,
        feature_dim: 32,
        signal: 1.5,
        noise_sd: 0.8,
        seed: 0,
    })?;
    let train_config = TrainConfig::default();

    // The attacker's side: proxies trained on their own splits vote on
    // which features to push and in which direction.
    let spec = PerturbationSpec {
        lambda: 50.0,
        top_fraction: 0.25,
        sign_agreement: 0.7,
        n_proxies: 6,
        flip_sign: false,
    };
    let ensemble = proxy_scores(&g, spec.n_proxies, &train_config, 101)?;
    let epsilon = build_epsilon(&ensemble.scores, &spec)?;
    let perturbed: Vec<usize> =
        (0..epsilon.len()).filter(|&d| epsilon[d] != 0.0).collect();
    println!(
        "{} proxies agree on features {perturbed:?}",
        ensemble.scores.len()
    );

    // The defender's side: an independently seeded victim model.
    let split = random_split(g.n(), 0.6, 0.2, 2024)?;
    let victim = train(&g, &split, &TrainConfig { seed: 2024, ..train_config })?;

    let constraint = SelectionConstraint::percentile(10, 0.3);
    println!("\nbudget {} nodes, cap at the 0.3 degree percentile", constraint.r);
    println!("{:>12}  {:>8}  {:>8}  {:>8}", "strategy", "clean", "attacked", "flipped");
    for strategy in [
        Strategy::Random { seed: 9 },
        Strategy::Degree,
        Strategy::Rwcs { l_walk: 4 },
        Strategy::InfmaxUnif { l_walk: 4, a: 0.01 },
    ] {
        let plan = select(&g, &constraint, &strategy)?;
        let outcome = evaluate_attack(&victim, &g, &plan, &epsilon, &split.test)?;
        println!(
            "{:>12}  {:>8.4}  {:>8.4}  {:>8}",
            plan.strategy.name(),
            outcome.clean_accuracy,
            outcome.attacked_accuracy,
            outcome.flipped
        );
    }
    Ok(())
}
