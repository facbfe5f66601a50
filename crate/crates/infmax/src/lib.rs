//! Adversarial node selection for graph convolutional networks, cast as
//! influence maximization under a linear threshold model.
//!
//! The attacker picks a small set of nodes under a degree cap, adds a
//! shared feature perturbation to them, and tries to flip the
//! predictions of as many other nodes as possible. Selecting the nodes
//! reduces to maximizing a submodular spread objective over powers of
//! the graph's random-walk matrix, which a greedy pass solves with the
//! usual approximation guarantee.
//!
//! ## Examples
//!
//! Each major capability has a runnable example; start with the
//! building blocks and work down toward the full pipeline.
//!
//! Mechanics of the spread model:
//!
//! - **`random_walk_influence`** - the self-inclusive random walk and
//!   the influence columns that feed every selection strategy
//! - **`centrality_scores`** - degree, betweenness, and PageRank
//!   baselines on a two-cluster bridge graph
//! - **`threshold_objectives`** - closed-form expected activations
//!   against Monte Carlo cascades, and greedy against the optimum
//! - **`set_cover_hardness`** - the reduction that makes exact
//!   maximization NP-hard, run on a planted cover
//!
//! ```bash
//! cargo run -p infmax --example random_walk_influence
//! cargo run -p infmax --example centrality_scores
//! cargo run -p infmax --example threshold_objectives
//! cargo run -p infmax --example set_cover_hardness
//! ```
//!
//! The attack pipeline on trained models:
//!
//! - **`surrogate_check`** - flip thresholds from the linearized model
//!   agree with brute forward passes
//! - **`train_and_attack`** - proxies vote on a perturbation, then each
//!   strategy attacks an independently trained victim
//! - **`attack_strategies`** - all eight selection strategies side by
//!   side on the same graph
//! - **`theta_histogram`** - per-node flip-threshold distributions
//!   across retrainings, with the density-shape diagnostic
//! - **`sbm_case_study`** - why dispersed picks beat hub picks on a
//!   four-community graph
//!
//! ```bash
//! cargo run -p infmax --example surrogate_check
//! cargo run -p infmax --example train_and_attack
//! cargo run -p infmax --example attack_strategies
//! cargo run -p infmax --example theta_histogram
//! cargo run -p infmax --example sbm_case_study
//! ```
//!
//! The same capabilities are scriptable through the thin `infmax`
//! binary (`synth`, `attack`, `simulate`, `eval`, `theta-hist`,
//! `experiment`, `report`), which reads flat `key = value` config files
//! and writes JSON/CSV artifacts; `infmax --help` lists the
//! subcommands.
//!
//! ## Modules
//!
//! - [`graph`]: adjacency, random-walk matrix, influence columns
//! - [`ltm`]: threshold objectives, greedy and exhaustive maximizers,
//!   cascade simulation, the set-cover reduction
//! - [`strategies`]: node selection under degree caps
//! - [`centrality`]: structural baselines
//! - [`victim`], [`surrogate`]: the GCN being attacked and its
//!   linearized stand-in
//! - [`perturb`]: proxy ensembles and the shared feature perturbation
//! - [`synth`]: stochastic block model generation
//! - [`experiment`]: paired-trial evaluation harness
//! - [`rng`]: seed derivation for reproducible streams

pub mod centrality;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod ltm;
pub mod perturb;
pub mod surrogate;
pub mod synth;
pub mod victim;
pub mod rng;
pub mod strategies;

pub use error::{Error, Result};
