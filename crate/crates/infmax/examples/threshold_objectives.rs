//! Expected spread under random thresholds: closed forms, Monte Carlo
//! agreement, and greedy maximization with its approximation guarantee.
//!
//! ```bash
//! cargo run -p infmax --example threshold_objectives
//! ```

use infmax::ltm::{
    brute_force_optimum, greedy_maximize, objective_value, simulate_mean, BipartiteInstance,
    ThresholdSpec,
};

fn main() -> infmax::Result<()> {
    // Three seeds influencing five targets with overlapping weight
    // patterns; seed 0 is broad, seeds 1 and 2 are narrow but strong.
    let weights = [
        (0, 0, 0.4),
        (0, 1, 0.4),
        (0, 2, 0.4),
        (0, 3, 0.1),
        (1, 2, 0.9),
        (1, 3, 0.8),
        (2, 3, 0.3),
        (2, 4, 0.9),
    ];
    let spec = ThresholdSpec::uniform(0.5);
    let inst = BipartiteInstance::new(3, 5, &weights, spec.clone())?;

    println!("expected spread of each single seed, thresholds U(-0.5, 0.5):");
    for s in 0..3 {
        let value = objective_value(&inst, &spec, &[s])?;
        println!("  seed {s}: {value:.4}");
    }

    // The closed form must match simulation within Monte Carlo error.
    let set = vec![0, 1];
    let exact = objective_value(&inst, &spec, &set)?;
    let mc = simulate_mean(&inst, &set, 200_000, 7)?;
    println!("\nseed set {{0, 1}}:");
    println!("  closed form:  {exact:.5}");
    println!("  monte carlo:  {:.5} +- {:.5} ({} trials)", mc.mean, mc.std_err, mc.trials);

    // Greedy on a monotone submodular objective stays within 1 - 1/e
    // of the best subset; on this instance it is exactly optimal.
    let (greedy_set, trace) = greedy_maximize(&inst, &spec, &[0, 1, 2], 2)?;
    let (best_set, best_value) = brute_force_optimum(&inst, &spec, &[0, 1, 2], 2)?;
    println!("\ngreedy picks {greedy_set:?} with trace {trace:?}");
    println!("optimum is  {best_set:?} with value {best_value:.4}");
    let ratio = trace.last().unwrap() / best_value;
    println!("ratio {ratio:.4} (guarantee: at least {:.4})", 1.0 - (-1.0f64).exp());

    // Gaussian thresholds concentrate near zero, so the same loads
    // convert more easily.
    let normal = ThresholdSpec::normal(0.25);
    let value = objective_value(&inst, &normal, &set)?;
    println!("\nsame set under N(0, 0.25^2) thresholds: {value:.4}");
    Ok(())
}
