//! End-to-end experiment pipeline: flat-file configuration, the
//! per-trial attack protocol, aggregation with paired significance
//! tests, and deterministic report emission.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::graph::{build_graph, load_edge_list, load_features, load_labels, Graph};
use crate::perturb::{build_epsilon, proxy_scores, PerturbationSpec};
use crate::rng::{derive_seed, streams};
use crate::strategies::{select, AttackPlan, SelectionConstraint, Strategy};
use crate::surrogate::{theta_histogram, ThetaHistogram};
use crate::synth::{generate_sbm, SBMConfig};
use crate::victim::{evaluate_attack, random_split, train, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DatasetSpec {
    /// Load the graph from edge list, feature, and label files.
    Files {
        edges: PathBuf,
        features: Option<PathBuf>,
        labels: Option<PathBuf>,
    },
    /// Generate a blockmodel graph; its seed comes from the master seed.
    Synth(SBMConfig),
}

/// Seed budget, either a node count or a fraction of the graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Budget {
    Absolute(usize),
    Fraction(f64),
}

impl Budget {
    pub fn resolve(&self, n: usize) -> Result<usize> {
        match *self {
            Budget::Absolute(r) => {
                if r == 0 || r > n {
                    Err(Error::invalid(format!("budget {r} outside 1..={n}")))
                } else {
                    Ok(r)
                }
            }
            Budget::Fraction(f) => {
                if !(f > 0.0 && f <= 1.0) {
                    Err(Error::invalid(format!("budget fraction {f} outside (0, 1]")))
                } else {
                    Ok(((f * n as f64).floor() as usize).max(1))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    /// Strategy names to run; `none` stands for the unattacked model.
    pub strategies: Vec<String>,
    pub budget: Budget,
    pub degree_percentile: f64,
    pub l_walk: usize,
    /// Uniform threshold half-width for `infmax-unif`.
    pub a: f64,
    /// Normal threshold spread for `infmax-norm`.
    pub sigma: f64,
    /// Row binarization count for `gc-rwcs`.
    pub l_top: usize,
    /// Neighborhood exclusion radius for `gc-rwcs`.
    pub k_hops: usize,
    pub perturbation: PerturbationSpec,
    pub train: TrainConfig,
    pub trials: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            dataset: DatasetSpec::Synth(SBMConfig::default()),
            strategies: vec![
                "none".into(),
                "random".into(),
                "degree".into(),
                "rwcs".into(),
                "gc-rwcs".into(),
                "infmax-unif".into(),
                "infmax-norm".into(),
            ],
            budget: Budget::Fraction(0.01),
            degree_percentile: 0.1,
            l_walk: 4,
            a: 0.01,
            sigma: 0.01,
            l_top: 30,
            k_hops: 1,
            perturbation: PerturbationSpec::default(),
            train: TrainConfig::default(),
            trials: 40,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::invalid("no strategies configured"));
        }
        for name in &self.strategies {
            build_strategy(self, name, 0)?;
        }
        match self.budget {
            Budget::Absolute(0) => {
                return Err(Error::invalid("budget 0 outside 1..=N"));
            }
            Budget::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(Error::invalid(format!("budget fraction {f} outside (0, 1]")));
            }
            _ => {}
        }
        if !(self.degree_percentile > 0.0 && self.degree_percentile <= 1.0) {
            return Err(Error::invalid(format!(
                "degree percentile {} outside (0, 1]",
                self.degree_percentile
            )));
        }
        if self.l_walk == 0 || self.l_top == 0 {
            return Err(Error::invalid("walk length and row cutoff must be positive"));
        }
        if !(self.a > 0.0) || !(self.sigma > 0.0) {
            return Err(Error::invalid("threshold spreads must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("need at least one trial"));
        }
        self.perturbation.validate()?;
        if let DatasetSpec::Synth(sbm) = &self.dataset {
            sbm.validate()?;
        }
        Ok(())
    }
}

/// Instantiate a strategy by name with this configuration's parameters;
/// `none` maps to no strategy at all (the clean model).
pub fn build_strategy(cfg: &ExperimentConfig, name: &str, seed: u64) -> Result<Option<Strategy>> {
    Ok(Some(match name {
        "none" => return Ok(None),
        "infmax-unif" => Strategy::InfmaxUnif { l_walk: cfg.l_walk, a: cfg.a },
        "infmax-norm" => Strategy::InfmaxNorm { l_walk: cfg.l_walk, sigma: cfg.sigma },
        "rwcs" => Strategy::Rwcs { l_walk: cfg.l_walk },
        "gc-rwcs" => Strategy::GcRwcs {
            l_walk: cfg.l_walk,
            l_top: cfg.l_top,
            k_hops: cfg.k_hops,
        },
        "degree" => Strategy::Degree,
        "betweenness" => Strategy::Betweenness,
        "pagerank" => Strategy::Pagerank,
        "random" => Strategy::Random { seed },
        other => return Err(Error::invalid(format!("unknown strategy {other:?}"))),
    }))
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Graph> {
    match &cfg.dataset {
        DatasetSpec::Synth(sbm) => generate_sbm(&SBMConfig { seed: cfg.seed, ..*sbm }),
        DatasetSpec::Files { edges, features, labels } => {
            let edge_list = load_edge_list(edges)?;
            let feats = features.as_ref().map(|p| load_features(p)).transpose()?;
            let labs = labels.as_ref().map(|p| load_labels(p)).transpose()?;
            build_graph(&edge_list, feats.as_deref(), labs.as_deref())
        }
    }
}

/// Parse the flat `key = value` configuration format. `#` starts a
/// comment, unknown and duplicate keys are rejected, and the dataset
/// must be named either by file paths or `synth = sbm`.
pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut sbm = SBMConfig::default();
    let mut edges: Option<PathBuf> = None;
    let mut features: Option<PathBuf> = None;
    let mut labels: Option<PathBuf> = None;
    let mut synth = false;
    let mut seen: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(path, lineno, format!("expected key = value, got {raw:?}")))?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(Error::parse(path, lineno, format!("no value for key {key:?}")));
        }
        if seen.iter().any(|k| k == key) {
            return Err(Error::parse(path, lineno, format!("duplicate key {key:?}")));
        }
        seen.push(key.to_string());

        let bad = |what: &str| Error::parse(path, lineno, format!("bad {what} {value:?}"));
        macro_rules! num {
            ($ty:ty, $what:expr) => {
                value.parse::<$ty>().map_err(|_| bad($what))?
            };
        }
        match key {
            "edges" => edges = Some(PathBuf::from(value)),
            "features" => features = Some(PathBuf::from(value)),
            "labels" => labels = Some(PathBuf::from(value)),
            "synth" => {
                if value != "sbm" {
                    return Err(bad("synthetic dataset kind"));
                }
                synth = true;
            }
            "communities" => sbm.n_communities = num!(usize, "count"),
            "nodes_per_community" => sbm.nodes_per_community = num!(usize, "count"),
            "p_in" => sbm.p_in = num!(f64, "probability"),
            "p_out" => sbm.p_out = num!(f64, "probability"),
            "feature_dim" => sbm.feature_dim = num!(usize, "count"),
            "signal" => sbm.signal = num!(f64, "number"),
            "noise_sd" => sbm.noise_sd = num!(f64, "number"),
            "strategies" => {
                cfg.strategies = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                if cfg.strategies.is_empty() {
                    return Err(bad("strategy list"));
                }
            }
            "budget" => {
                cfg.budget = match value.parse::<usize>() {
                    Ok(r) => Budget::Absolute(r),
                    Err(_) => Budget::Fraction(num!(f64, "budget")),
                }
            }
            "degree_percentile" => cfg.degree_percentile = num!(f64, "fraction"),
            "l_walk" => cfg.l_walk = num!(usize, "count"),
            "a" => cfg.a = num!(f64, "number"),
            "sigma" => cfg.sigma = num!(f64, "number"),
            "l_top" => cfg.l_top = num!(usize, "count"),
            "k_hops" => cfg.k_hops = num!(usize, "count"),
            "lambda" => cfg.perturbation.lambda = num!(f64, "number"),
            "top_fraction" => cfg.perturbation.top_fraction = num!(f64, "fraction"),
            "sign_agreement" => cfg.perturbation.sign_agreement = num!(f64, "fraction"),
            "n_proxies" => cfg.perturbation.n_proxies = num!(usize, "count"),
            "flip_sign" => cfg.perturbation.flip_sign = num!(bool, "flag"),
            "hidden" => cfg.train.hidden = num!(usize, "count"),
            "learning_rate" => cfg.train.learning_rate = num!(f64, "number"),
            "epochs" => cfg.train.epochs = num!(usize, "count"),
            "weight_decay" => cfg.train.weight_decay = num!(f64, "number"),
            "trials" => cfg.trials = num!(usize, "count"),
            "seed" => cfg.seed = num!(u64, "seed"),
            other => {
                return Err(Error::parse(path, lineno, format!("unknown key {other:?}")));
            }
        }
    }

    cfg.dataset = match (synth, edges) {
        (true, None) => DatasetSpec::Synth(sbm),
        (false, Some(e)) => DatasetSpec::Files { edges: e, features, labels },
        (true, Some(_)) => {
            return Err(Error::parse(path, 0, "config names both files and a synthetic dataset"))
        }
        (false, None) => {
            return Err(Error::parse(path, 0, "config names no dataset (edges = ... or synth = sbm)"))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Sample mean and standard error of the mean.
pub fn mean_and_sem(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Two-sided paired t-test on per-trial differences. A zero-variance
/// difference degenerates to p = 1 when the means agree and p = 0 when
/// they do not.
pub fn paired_p_value(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "paired test needs equal-length samples");
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (mean, sem) = mean_and_sem(&d);
    if sem == 0.0 {
        return if mean == 0.0 { 1.0 } else { 0.0 };
    }
    let t = mean / sem;
    let dist = StudentsT::new(0.0, 1.0, (d.len() - 1) as f64).expect("valid degrees of freedom");
    2.0 * (1.0 - dist.cdf(t.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub name: String,
    /// Test accuracy under this strategy's attack, one entry per
    /// completed trial.
    pub accuracy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub mean_accuracy: f64,
    pub sem: f64,
    /// Paired p-value against the `none` row, when one exists.
    pub p_vs_none: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub budget: usize,
    pub degree_cap: usize,
    pub trials_requested: usize,
    pub trials_completed: usize,
    pub trials_failed: usize,
    pub strategies: Vec<StrategyResult>,
    pub summary: Vec<SummaryRow>,
    /// Paired p-values between every ordered strategy pair.
    pub pairwise_p: Vec<Vec<f64>>,
}

impl ExperimentResults {
    fn summarize(&mut self) {
        let none_row = self
            .strategies
            .iter()
            .position(|s| s.name == "none")
            .map(|i| self.strategies[i].accuracy.clone());
        self.summary = self
            .strategies
            .iter()
            .map(|s| {
                let (mean_accuracy, sem) = mean_and_sem(&s.accuracy);
                SummaryRow {
                    name: s.name.clone(),
                    mean_accuracy,
                    sem,
                    p_vs_none: none_row.as_ref().map(|c| paired_p_value(&s.accuracy, c)),
                }
            })
            .collect();
        self.pairwise_p = self
            .strategies
            .iter()
            .map(|a| {
                self.strategies
                    .iter()
                    .map(|b| paired_p_value(&a.accuracy, &b.accuracy))
                    .collect()
            })
            .collect();
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("results serialize");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<ExperimentResults> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad results file: {e}")))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("strategy,mean_accuracy,sem,p_vs_none\n");
        for row in &self.summary {
            let p = row.p_vs_none.map(|p| p.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{p}\n", row.name, row.mean_accuracy, row.sem));
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from(
            "| Strategy | Test accuracy | SEM | p vs clean |\n|---|---|---|---|\n",
        );
        for row in &self.summary {
            let p = row.p_vs_none.map(|p| format!("{p:.4}")).unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "| {} | {:.4} | {:.4} | {p} |\n",
                row.name, row.mean_accuracy, row.sem
            ));
        }
        out
    }
}

/// Run the full protocol: per trial, draw a split, train proxies on
/// their own splits, aggregate their gradients into the perturbation,
/// train the victim, then measure its test accuracy under every
/// configured strategy. Trials whose training pipeline fails are
/// dropped; more than 20% dropped fails the experiment.
pub fn run_attack_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    let g = load_dataset(cfg)?;
    g.labeled_features()?;
    let r = cfg.budget.resolve(g.n())?;
    let constraint = SelectionConstraint::percentile(r, cfg.degree_percentile);
    constraint.validate()?;
    let degree_cap = constraint.resolve_cap(&g)?;

    // Deterministic strategies never change across trials; compute
    // those plans once. `random` redraws per trial, `none` is empty.
    let mut sources = Vec::new();
    for name in &cfg.strategies {
        let source = match build_strategy(cfg, name, 0)? {
            None => PlanSource::Clean,
            Some(Strategy::Random { .. }) => PlanSource::RandomPerTrial,
            Some(strategy) => PlanSource::Fixed(select(&g, &constraint, &strategy)?),
        };
        sources.push(source);
    }

    let mut accuracy: Vec<Vec<f64>> = vec![Vec::new(); cfg.strategies.len()];
    let mut trials_failed = 0usize;
    for trial in 0..cfg.trials {
        let trial_seed = derive_seed(cfg.seed, streams::TRIAL, trial as u64);
        let outcome = run_trial(cfg, &g, &constraint, &sources, trial, trial_seed);
        match outcome {
            Ok(per_strategy) => {
                for (acc, v) in accuracy.iter_mut().zip(per_strategy) {
                    acc.push(v);
                }
            }
            Err(err) => {
                log::warn!("trial {trial} failed: {err}");
                trials_failed += 1;
            }
        }
    }
    if trials_failed * 5 > cfg.trials {
        return Err(Error::Numeric(format!(
            "{trials_failed} of {} trials failed",
            cfg.trials
        )));
    }

    let mut results = ExperimentResults {
        n_nodes: g.n(),
        n_edges: g.n_edges(),
        budget: r,
        degree_cap,
        trials_requested: cfg.trials,
        trials_completed: cfg.trials - trials_failed,
        trials_failed,
        strategies: cfg
            .strategies
            .iter()
            .zip(accuracy)
            .map(|(name, accuracy)| StrategyResult { name: name.clone(), accuracy })
            .collect(),
        summary: Vec::new(),
        pairwise_p: Vec::new(),
    };
    results.summarize();
    Ok(results)
}

enum PlanSource {
    Clean,
    Fixed(AttackPlan),
    RandomPerTrial,
}

fn run_trial(
    cfg: &ExperimentConfig,
    g: &Graph,
    constraint: &SelectionConstraint,
    sources: &[PlanSource],
    trial: usize,
    trial_seed: u64,
) -> Result<Vec<f64>> {
    let split = random_split(g.n(), 0.6, 0.2, trial_seed)?;
    let ensemble = proxy_scores(g, cfg.perturbation.n_proxies, &cfg.train, trial_seed)?;
    let epsilon = build_epsilon(&ensemble.scores, &cfg.perturbation)?;
    let victim = train(g, &split, &TrainConfig { seed: trial_seed, ..cfg.train })?;

    let mut per_strategy = Vec::with_capacity(sources.len());
    for source in sources {
        let accuracy = match source {
            PlanSource::Clean => {
                let (x, y) = g.labeled_features()?;
                victim.accuracy(g, &x.to_owned(), y, &split.test)?
            }
            PlanSource::Fixed(plan) => {
                evaluate_attack(&victim, g, plan, &epsilon, &split.test)?.attacked_accuracy
            }
            PlanSource::RandomPerTrial => {
                let strategy = Strategy::Random {
                    seed: derive_seed(cfg.seed, streams::STRATEGY_RANDOM, trial as u64),
                };
                let plan = select(g, constraint, &strategy)?;
                evaluate_attack(&victim, g, &plan, &epsilon, &split.test)?.attacked_accuracy
            }
        };
        per_strategy.push(accuracy);
    }
    Ok(per_strategy)
}

/// Threshold-sample runs reuse the experiment configuration for the
/// dataset and trainer; the perturbation comes in explicitly.
pub fn run_theta_hist(cfg: &ExperimentConfig, epsilon: &[f64]) -> Result<(Graph, ThetaHistogram)> {
    let g = load_dataset(cfg)?;
    let (x, y) = g.labeled_features()?;
    let x = x.to_owned();
    let y = y.to_vec();
    let hist = theta_histogram(&g, &x, &y, epsilon, &cfg.train, cfg.trials, cfg.seed)?;
    Ok((g, hist))
}
