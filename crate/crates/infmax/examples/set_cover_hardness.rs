//! The set-cover reduction: covering decisions embed into threshold
//! influence instances, which is why exact budgeted selection is hard
//! and greedy is the principled compromise.
//!
//! ```bash
//! cargo run -p infmax --example set_cover_hardness
//! ```

use infmax::ltm::{greedy_maximize, setcover_decision, setcover_instance};

fn main() -> infmax::Result<()> {
    // Universe {0..5} and four candidate subsets. Two subsets suffice:
    // {0,1,2} with {3,4,5}.
    let subsets: Vec<Vec<usize>> = vec![
        vec![0, 1, 2],
        vec![3, 4, 5],
        vec![0, 2, 4],
        vec![1, 3],
    ];
    let alpha = 0.5;
    let inst = setcover_instance(6, &subsets, alpha)?;

    println!("universe of 6 elements, subsets:");
    for (i, s) in subsets.iter().enumerate() {
        println!("  set {i}: {s:?}");
    }

    for r in 1..=3 {
        let covered = setcover_decision(&inst, r)?;
        println!("can {r} subsets cover everything? {covered}");
    }

    // The embedded objective counts covered elements exactly, so greedy
    // on the influence instance is greedy set cover.
    let spec = inst.thresholds.clone();
    let candidates: Vec<usize> = (0..subsets.len()).collect();
    let (picked, trace) = greedy_maximize(&inst, &spec, &candidates, 2)?;
    println!("\ngreedy cover picks sets {picked:?}");
    println!("elements covered after each pick: {trace:?}");
    Ok(())
}
