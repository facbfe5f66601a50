//! Synthetic stochastic-blockmodel data with planted labels and
//! class-informative features, plus the case-study layout export used
//! to visualize where a strategy's picks land.

use ndarray::Array2;
use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{derive_seed, rng_from_seed, streams};
use crate::strategies::AttackPlan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SBMConfig {
    pub n_communities: usize,
    pub nodes_per_community: usize,
    /// Within-community edge probability; cross pairs use `p_out <= p_in`.
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    /// Mean offset on the feature dimensions assigned to a node's class.
    pub signal: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SBMConfig {
    fn default() -> SBMConfig {
        SBMConfig {
            n_communities: 4,
            nodes_per_community: 100,
            p_in: 0.05,
            p_out: 0.005,
            feature_dim: 100,
            signal: 1.0,
            noise_sd: 1.0,
            seed: 0,
        }
    }
}

impl SBMConfig {
    pub fn n(&self) -> usize {
        self.n_communities * self.nodes_per_community
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_communities == 0 || self.nodes_per_community == 0 {
            return Err(Error::invalid("blockmodel needs at least one node per community"));
        }
        let ok = |p: f64| p.is_finite() && (0.0..=1.0).contains(&p);
        if !ok(self.p_in) || !ok(self.p_out) || self.p_out > self.p_in {
            return Err(Error::invalid(format!(
                "edge probabilities need 0 <= p_out <= p_in <= 1, got p_in={}, p_out={}",
                self.p_in, self.p_out
            )));
        }
        if self.feature_dim == 0 || !(self.noise_sd >= 0.0) || !self.signal.is_finite() {
            return Err(Error::invalid("bad feature parameters"));
        }
        Ok(())
    }
}

/// Sample a blockmodel graph: node i belongs to community i / per_block,
/// the label equals the community, and feature d of a class-c node has
/// mean `signal` when d = c (mod n_communities) and 0 otherwise, plus
/// N(0, noise_sd^2) noise. Node ids are zero-padded decimals so token
/// order equals generation order.
pub fn generate_sbm(cfg: &SBMConfig) -> Result<Graph> {
    cfg.validate()?;
    let n = cfg.n();
    let width = (n.max(2) - 1).to_string().len();
    let node_ids: Vec<String> = (0..n).map(|i| format!("{i:0width$}")).collect();
    let community = |i: usize| i / cfg.nodes_per_community;

    let mut edge_rng = rng_from_seed(derive_seed(cfg.seed, streams::SBM_EDGES, 0));
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if community(i) == community(j) {
                cfg.p_in
            } else {
                cfg.p_out
            };
            if edge_rng.random_range(0.0..1.0) < p {
                edges.push((i, j));
            }
        }
    }

    let mut feat_rng = rng_from_seed(derive_seed(cfg.seed, streams::SBM_FEATURES, 0));
    let mut features = Array2::zeros((n, cfg.feature_dim));
    for i in 0..n {
        let c = community(i);
        for d in 0..cfg.feature_dim {
            let mean = if d % cfg.n_communities == c {
                cfg.signal
            } else {
                0.0
            };
            let z: f64 = StandardNormal.sample(&mut feat_rng);
            features[(i, d)] = mean + cfg.noise_sd * z;
        }
    }
    let labels: Vec<usize> = (0..n).map(community).collect();
    Graph::from_indexed(node_ids, &edges, Some(features), Some(labels))
}

/// Write a graph in the standard loadable formats: `edges.txt` with one
/// whitespace pair per line, `features.csv` and `labels.csv` keyed by
/// node id.
pub fn write_graph_files(g: &Graph, dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut edges = String::new();
    for i in 0..g.n() {
        for &j in g.neighbors(i) {
            if i < j {
                edges.push_str(&format!("{} {}\n", g.node_id(i), g.node_id(j)));
            }
        }
    }
    let path = dir.join("edges.txt");
    std::fs::write(&path, edges).map_err(|e| Error::io(&path, e))?;

    if let Some(x) = g.features() {
        let mut out = String::new();
        for i in 0..g.n() {
            out.push_str(g.node_id(i));
            for v in x.row(i) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        let path = dir.join("features.csv");
        std::fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
    }
    if let Some(labels) = g.labels() {
        let mut out = String::new();
        for i in 0..g.n() {
            out.push_str(&format!("{},{}\n", g.node_id(i), labels[i]));
        }
        let path = dir.join("labels.csv");
        std::fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Layout data for plotting where each strategy's picks fall: community
/// per node, the edge list, and per-plan dispersion statistics.
#[derive(Debug, Serialize)]
pub struct CaseStudy {
    pub nodes: Vec<String>,
    pub communities: Vec<usize>,
    pub edges: Vec<(String, String)>,
    pub strategies: Vec<PlanLayout>,
}

#[derive(Debug, Serialize)]
pub struct PlanLayout {
    pub strategy: String,
    pub selected: Vec<String>,
    /// Distinct communities among the selected nodes.
    pub communities_hit: usize,
    /// Mean shortest-path distance over connected selected pairs; absent
    /// when fewer than two selected nodes can reach each other.
    pub mean_pairwise_distance: Option<f64>,
}

pub fn case_study_export(g: &Graph, plans: &[AttackPlan]) -> Result<CaseStudy> {
    let labels = g
        .labels()
        .ok_or_else(|| Error::invalid("case study needs labels as communities"))?;
    let mut edges = Vec::new();
    for i in 0..g.n() {
        for &j in g.neighbors(i) {
            if i < j {
                edges.push((g.node_id(i).to_string(), g.node_id(j).to_string()));
            }
        }
    }
    let mut strategies = Vec::new();
    for plan in plans {
        if let Some(&bad) = plan.selected.iter().find(|&&i| i >= g.n()) {
            return Err(Error::invalid(format!("plan references node {bad} outside the graph")));
        }
        let mut hit: Vec<usize> = plan.selected.iter().map(|&i| labels[i]).collect();
        hit.sort_unstable();
        hit.dedup();

        let mut pair_sum = 0.0;
        let mut pairs = 0usize;
        for (a, &u) in plan.selected.iter().enumerate() {
            let dist = g.bfs_distances(u);
            for &v in plan.selected.iter().skip(a + 1) {
                if let Some(d) = dist[v] {
                    pair_sum += d as f64;
                    pairs += 1;
                }
            }
        }
        strategies.push(PlanLayout {
            strategy: plan.strategy.name().to_string(),
            selected: plan.selected.iter().map(|&i| g.node_id(i).to_string()).collect(),
            communities_hit: hit.len(),
            mean_pairwise_distance: (pairs > 0).then(|| pair_sum / pairs as f64),
        });
    }
    Ok(CaseStudy {
        nodes: (0..g.n()).map(|i| g.node_id(i).to_string()).collect(),
        communities: labels.to_vec(),
        edges,
        strategies,
    })
}
