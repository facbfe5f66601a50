//! Thin command-line front end: each subcommand reads its inputs, runs
//! one library operation, and writes the outputs under `--out` together
//! with a manifest listing them.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use infmax::error::Error;
use infmax::experiment::{
    build_strategy, load_dataset, parse_config, run_attack_experiment, run_theta_hist,
    ExperimentConfig, ExperimentResults,
};
use infmax::ltm::{simulate_mean, BipartiteInstance};
use infmax::perturb::read_epsilon;
use infmax::strategies::{select, AttackPlan, SelectionConstraint};
use infmax::synth::write_graph_files;
use infmax::victim::{evaluate_attack, VictimGCN};

#[derive(Parser)]
#[command(
    name = "infmax",
    version,
    about = "Adversarial node selection for graph convolutional networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic blockmodel dataset on disk.
    Synth {
        /// Configuration with `synth = sbm` and blockmodel parameters.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select an attack node set with one strategy.
    Attack {
        #[arg(long)]
        config: PathBuf,
        /// Strategy name, e.g. degree, rwcs, infmax-unif.
        #[arg(long)]
        strategy: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo spread of a seed set on a stored threshold instance.
    Simulate {
        /// Bipartite influence instance as JSON.
        #[arg(long)]
        instance: PathBuf,
        /// Comma-separated seed indices, e.g. `0,3,7`.
        #[arg(long)]
        seed_set: String,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure a trained model's accuracy under a stored plan.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// Model checkpoint JSON; its own test split scores the attack.
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        /// Perturbation CSV applied to the planned nodes.
        #[arg(long)]
        epsilon: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample per-node flip thresholds across repeated trainings.
    ThetaHist {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        epsilon: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full multi-trial attack comparison.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-emit a stored results file in the chosen formats.
    Report {
        #[arg(long)]
        results: PathBuf,
        /// Any of json, csv, markdown.
        #[arg(long, value_delimiter = ',', default_value = "json,csv,markdown")]
        format: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn read_text(path: &Path) -> infmax::Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load_config(path: &Path) -> infmax::Result<ExperimentConfig> {
    parse_config(&read_text(path)?, path)
}

fn write_file(out: &Path, name: &str, content: &str) -> infmax::Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let path = out.join(name);
    std::fs::write(&path, content).map_err(|e| Error::io(&path, e))
}

fn write_manifest(out: &Path, command: &str, outputs: &[&str]) -> infmax::Result<()> {
    let doc = serde_json::json!({ "command": command, "outputs": outputs });
    let mut text = serde_json::to_string_pretty(&doc).expect("manifest serialize");
    text.push('\n');
    write_file(out, "manifest.json", &text)
}

fn pretty(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("value serialize");
    text.push('\n');
    text
}

fn run(command: Command) -> infmax::Result<()> {
    match command {
        Command::Synth { config, out } => {
            let cfg = load_config(&config)?;
            if !matches!(cfg.dataset, infmax::experiment::DatasetSpec::Synth(_)) {
                return Err(Error::invalid("synth needs a config with `synth = sbm`"));
            }
            let g = load_dataset(&cfg)?;
            write_graph_files(&g, &out)?;
            log::info!("wrote {} nodes, {} edges", g.n(), g.n_edges());
            write_manifest(&out, "synth", &["edges.txt", "features.csv", "labels.csv"])
        }
        Command::Attack { config, strategy, out } => {
            let cfg = load_config(&config)?;
            let g = load_dataset(&cfg)?;
            let r = cfg.budget.resolve(g.n())?;
            let constraint = SelectionConstraint::percentile(r, cfg.degree_percentile);
            let strategy = build_strategy(&cfg, &strategy, cfg.seed)?
                .ok_or_else(|| Error::invalid("`none` selects nothing; name a real strategy"))?;
            let plan = select(&g, &constraint, &strategy)?;
            if plan.shortfall > 0 {
                log::warn!("candidate pool exhausted {} picks early", plan.shortfall);
            }
            write_file(&out, "plan.json", &plan.to_json(&g)?)?;
            write_manifest(&out, "attack", &["plan.json"])
        }
        Command::Simulate { instance, seed_set, trials, seed, out } => {
            let text = read_text(&instance)?;
            let inst: BipartiteInstance = serde_json::from_str(&text)
                .map_err(|e| Error::parse(&instance, e.line(), e.to_string()))?;
            let seeds = parse_seed_set(&seed_set)?;
            let est = simulate_mean(&inst, &seeds, trials, seed)?;
            let doc = serde_json::json!({
                "mean": est.mean,
                "seeds": seeds,
                "std_err": est.std_err,
                "trials": est.trials,
            });
            write_file(&out, "simulation.json", &pretty(&doc))?;
            write_manifest(&out, "simulate", &["simulation.json"])
        }
        Command::Eval { config, checkpoint, plan, epsilon, out } => {
            let cfg = load_config(&config)?;
            let g = load_dataset(&cfg)?;
            let model = VictimGCN::from_json(&read_text(&checkpoint)?)?;
            let plan = AttackPlan::from_json(&g, &read_text(&plan)?)?;
            let eps = read_epsilon(&epsilon)?;
            let outcome = evaluate_attack(&model, &g, &plan, &eps, &model.split.test)?;
            let plan_doc: serde_json::Value = serde_json::from_str(&outcome.plan.to_json(&g)?)
                .expect("plan round trip");
            let doc = serde_json::json!({
                "attacked_accuracy": outcome.attacked_accuracy,
                "clean_accuracy": outcome.clean_accuracy,
                "flipped": outcome.flipped,
                "lambda": outcome.lambda,
                "n_eval": outcome.n_eval,
                "plan": plan_doc,
            });
            write_file(&out, "evaluation.json", &pretty(&doc))?;
            write_manifest(&out, "eval", &["evaluation.json"])
        }
        Command::ThetaHist { config, epsilon, out } => {
            let cfg = load_config(&config)?;
            let eps = read_epsilon(&epsilon)?;
            let (g, hist) = run_theta_hist(&cfg, &eps)?;
            if hist.samples.iter().all(|row| row.iter().all(|v| v.is_infinite())) {
                log::warn!("every threshold is infinite; this perturbation flips nothing");
            }
            let doc = serde_json::json!({
                "diverged_trials": hist.n_failed,
                "monotone_fraction": hist.monotone_fraction(),
                "trials_kept": cfg.trials - hist.n_failed,
            });
            write_file(&out, "theta_samples.csv", &hist.samples_csv(&g))?;
            write_file(&out, "theta_diagnostic.csv", &hist.diagnostic_csv(&g))?;
            write_file(&out, "theta_summary.json", &pretty(&doc))?;
            write_manifest(
                &out,
                "theta-hist",
                &["theta_diagnostic.csv", "theta_samples.csv", "theta_summary.json"],
            )
        }
        Command::Experiment { config, out } => {
            let cfg = load_config(&config)?;
            let results = run_attack_experiment(&cfg)?;
            write_file(&out, "results.json", &results.to_json())?;
            write_file(&out, "results.csv", &results.to_csv())?;
            write_file(&out, "results.md", &results.to_markdown())?;
            write_manifest(&out, "experiment", &["results.csv", "results.json", "results.md"])
        }
        Command::Report { results, format, out } => {
            let parsed = ExperimentResults::from_json(&read_text(&results)?)?;
            let mut outputs = Vec::new();
            for fmt in &format {
                let (name, content) = match fmt.as_str() {
                    "json" => ("results.json", parsed.to_json()),
                    "csv" => ("results.csv", parsed.to_csv()),
                    "markdown" => ("results.md", parsed.to_markdown()),
                    other => {
                        return Err(Error::invalid(format!(
                            "unknown format {other:?}; pick json, csv, or markdown"
                        )))
                    }
                };
                write_file(&out, name, &content)?;
                outputs.push(name);
            }
            outputs.sort_unstable();
            outputs.dedup();
            write_manifest(&out, "report", &outputs)
        }
    }
}

fn parse_seed_set(text: &str) -> infmax::Result<Vec<usize>> {
    let seeds: Vec<usize> = text
        .split(',')
        .map(|t| t.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::invalid(format!("bad seed set {text:?}; expected e.g. 0,3,7")))?;
    if seeds.is_empty() {
        return Err(Error::invalid("empty seed set"));
    }
    Ok(seeds)
}
