//! Node-selection strategies under a budget and a degree cap.
//!
//! Every strategy answers the same question: which r low-degree nodes
//! should receive the feature perturbation. The influence-maximization
//! strategies run greedy on the threshold objectives over columns of
//! M^L; RWCS ranks nodes by total column mass; GC-RWCS greedily covers
//! binarized rows; the baselines rank by classic centrality or sample
//! uniformly.
//!
//! Shared conventions: candidate set = nodes with self-inclusive degree
//! at most m; all score and gain ties break toward the smaller node
//! index; when candidates run out before the budget, the plan carries
//! the shortfall instead of failing.

use serde::{Deserialize, Serialize};

use crate::centrality::{
    betweenness_centrality, degree_centrality, pagerank_centrality, PageRankConfig,
};
use crate::error::{Error, Result};
use crate::graph::{influence_columns, transition_matrix, Graph};
use crate::ltm::{greedy_maximize, ThresholdSpec};
use crate::rng::rng_from_seed;

/// Attack budget r plus the degree cap that defines the candidate set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConstraint {
    /// Maximum number of nodes to select.
    pub r: usize,
    pub cap: DegreeCap,
}

/// Degree cap, either a literal bound on |N_i| or "the lowest degree
/// among the top-p fraction of nodes by degree".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DegreeCap {
    Absolute { m: usize },
    Percentile { p: f64 },
}

impl SelectionConstraint {
    pub fn absolute(r: usize, m: usize) -> SelectionConstraint {
        SelectionConstraint {
            r,
            cap: DegreeCap::Absolute { m },
        }
    }

    pub fn percentile(r: usize, p: f64) -> SelectionConstraint {
        SelectionConstraint {
            r,
            cap: DegreeCap::Percentile { p },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::invalid("budget r must be at least 1"));
        }
        if let DegreeCap::Percentile { p } = self.cap {
            if !(p.is_finite() && p > 0.0 && p <= 1.0) {
                return Err(Error::invalid(format!(
                    "degree percentile must lie in (0, 1], got {p}"
                )));
            }
        }
        Ok(())
    }

    /// The literal cap m: the percentile form resolves to the degree of
    /// the node at rank ceil(p * N) when degrees are sorted descending.
    pub fn resolve_cap(&self, g: &Graph) -> Result<usize> {
        self.validate()?;
        match self.cap {
            DegreeCap::Absolute { m } => Ok(m),
            DegreeCap::Percentile { p } => {
                if g.n() == 0 {
                    return Err(Error::invalid("degree percentile on an empty graph"));
                }
                let mut degrees: Vec<usize> = (0..g.n()).map(|i| g.degree(i)).collect();
                degrees.sort_unstable_by(|a, b| b.cmp(a));
                let rank = ((p * g.n() as f64).ceil() as usize).clamp(1, g.n());
                Ok(degrees[rank - 1])
            }
        }
    }

    /// All nodes satisfying the cap, ascending.
    pub fn candidates(&self, g: &Graph) -> Result<Vec<usize>> {
        let m = self.resolve_cap(g)?;
        Ok((0..g.n()).filter(|&i| g.degree(i) <= m).collect())
    }
}

/// Strategy name plus its hyper-parameters; serializes under the CLI
/// spelling ("infmax-unif", "gc-rwcs", ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", content = "params", rename_all = "kebab-case")]
pub enum Strategy {
    InfmaxUnif { l_walk: usize, a: f64 },
    InfmaxNorm { l_walk: usize, sigma: f64 },
    Rwcs { l_walk: usize },
    GcRwcs { l_walk: usize, l_top: usize, k_hops: usize },
    Degree,
    Betweenness,
    Pagerank,
    Random { seed: u64 },
}

impl Strategy {
    /// Default hyper-parameters per strategy name; `seed` feeds only the
    /// random baseline.
    pub fn from_name(name: &str, seed: u64) -> Result<Strategy> {
        Ok(match name {
            "infmax-unif" => Strategy::InfmaxUnif { l_walk: 4, a: 0.01 },
            "infmax-norm" => Strategy::InfmaxNorm {
                l_walk: 4,
                sigma: 0.01,
            },
            "rwcs" => Strategy::Rwcs { l_walk: 4 },
            "gc-rwcs" => Strategy::GcRwcs {
                l_walk: 4,
                l_top: 30,
                k_hops: 1,
            },
            "degree" => Strategy::Degree,
            "betweenness" => Strategy::Betweenness,
            "pagerank" => Strategy::Pagerank,
            "random" => Strategy::Random { seed },
            other => {
                return Err(Error::invalid(format!(
                    "unknown strategy {other:?}; expected one of infmax-unif, \
                     infmax-norm, rwcs, gc-rwcs, degree, betweenness, pagerank, random"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::InfmaxUnif { .. } => "infmax-unif",
            Strategy::InfmaxNorm { .. } => "infmax-norm",
            Strategy::Rwcs { .. } => "rwcs",
            Strategy::GcRwcs { .. } => "gc-rwcs",
            Strategy::Degree => "degree",
            Strategy::Betweenness => "betweenness",
            Strategy::Pagerank => "pagerank",
            Strategy::Random { .. } => "random",
        }
    }
}

/// A finished selection: the chosen nodes in pick order, the objective
/// value after each greedy step (influence strategies only), and how far
/// short of the budget the candidate pool left us.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackPlan {
    pub strategy: Strategy,
    pub selected: Vec<usize>,
    pub trace: Vec<f64>,
    pub shortfall: usize,
}

#[derive(Serialize, Deserialize)]
struct PlanWire {
    #[serde(flatten)]
    strategy: Strategy,
    selected: Vec<String>,
    trace: Vec<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    shortfall: usize,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

impl AttackPlan {
    fn assemble(
        g: &Graph,
        c: &SelectionConstraint,
        strategy: Strategy,
        selected: Vec<usize>,
        trace: Vec<f64>,
    ) -> AttackPlan {
        debug_assert!(selected.len() <= c.r);
        let shortfall = c.r - selected.len();
        if shortfall > 0 {
            log::warn!(
                "{} selected {} of {} requested nodes on a {}-node graph",
                strategy.name(),
                selected.len(),
                c.r,
                g.n()
            );
        }
        AttackPlan {
            strategy,
            selected,
            trace,
            shortfall,
        }
    }

    /// Serialize with node ids instead of internal indices.
    pub fn to_json(&self, g: &Graph) -> Result<String> {
        let wire = PlanWire {
            strategy: self.strategy.clone(),
            selected: self
                .selected
                .iter()
                .map(|&i| {
                    if i < g.n() {
                        Ok(g.node_id(i).to_string())
                    } else {
                        Err(Error::invalid(format!("plan node {i} outside the graph")))
                    }
                })
                .collect::<Result<_>>()?,
            trace: self.trace.clone(),
            shortfall: self.shortfall,
        };
        serde_json::to_string_pretty(&wire).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn from_json(g: &Graph, text: &str) -> Result<AttackPlan> {
        let wire: PlanWire =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad plan: {e}")))?;
        let selected = wire
            .selected
            .iter()
            .map(|id| {
                g.index_of(id)
                    .ok_or_else(|| Error::invalid(format!("plan references unknown node {id:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        crate::graph::check_distinct(&selected)?;
        Ok(AttackPlan {
            strategy: wire.strategy,
            selected,
            trace: wire.trace,
            shortfall: wire.shortfall,
        })
    }
}

/// Run any strategy under the constraint.
pub fn select(g: &Graph, c: &SelectionConstraint, strategy: &Strategy) -> Result<AttackPlan> {
    match *strategy {
        Strategy::InfmaxUnif { l_walk, a } => {
            select_infmax(g, c, l_walk, InfmaxFamily::Uniform { a })
        }
        Strategy::InfmaxNorm { l_walk, sigma } => {
            select_infmax(g, c, l_walk, InfmaxFamily::Normal { sigma })
        }
        Strategy::Rwcs { l_walk } => select_rwcs(g, c, l_walk),
        Strategy::GcRwcs {
            l_walk,
            l_top,
            k_hops,
        } => select_gc_rwcs(g, c, l_walk, l_top, k_hops),
        Strategy::Degree => select_baseline(g, c, BaselineKind::Degree, 0),
        Strategy::Betweenness => select_baseline(g, c, BaselineKind::Betweenness, 0),
        Strategy::Pagerank => select_baseline(g, c, BaselineKind::Pagerank, 0),
        Strategy::Random { seed } => select_baseline(g, c, BaselineKind::Random, seed),
    }
}

/// Threshold family for the influence-maximization strategies.
#[derive(Debug, Clone, Copy)]
pub enum InfmaxFamily {
    Uniform { a: f64 },
    Normal { sigma: f64 },
}

/// Greedy influence maximization over columns of M^l_walk: each step
/// adds the candidate maximizing the expected-activation objective.
pub fn select_infmax(
    g: &Graph,
    c: &SelectionConstraint,
    l_walk: usize,
    family: InfmaxFamily,
) -> Result<AttackPlan> {
    let candidates = c.candidates(g)?;
    if candidates.is_empty() {
        return Err(Error::invalid(
            "influence maximization needs a nonempty candidate set",
        ));
    }
    let (spec, strategy) = match family {
        InfmaxFamily::Uniform { a } => (
            ThresholdSpec::Uniform { a, b: a },
            Strategy::InfmaxUnif { l_walk, a },
        ),
        InfmaxFamily::Normal { sigma } => (
            ThresholdSpec::Normal { sigma },
            Strategy::InfmaxNorm { l_walk, sigma },
        ),
    };
    let walk = transition_matrix(g);
    let matrix = influence_columns(&walk, &candidates, l_walk)?;
    let (selected, trace) = greedy_maximize(&matrix, &spec, &candidates, c.r)?;
    Ok(AttackPlan::assemble(g, c, strategy, selected, trace))
}

/// Top-r candidates by importance I(i) = sum_j [M^l_walk]_ji.
pub fn select_rwcs(g: &Graph, c: &SelectionConstraint, l_walk: usize) -> Result<AttackPlan> {
    let candidates = c.candidates(g)?;
    let walk = transition_matrix(g);
    // Summing each column in index order keeps these scores bit-identical
    // to the first-step greedy evaluation of the uniform objective with a
    // non-binding saturation point, which is what makes the "RWCS is a
    // special case" equality exact instead of merely approximate.
    let scores: Vec<(usize, f64)> = candidates
        .iter()
        .map(|&i| (i, walk.walk_column(i, l_walk).iter().sum()))
        .collect();
    let selected = top_by_score(&scores, c.r);
    Ok(AttackPlan::assemble(
        g,
        c,
        Strategy::Rwcs { l_walk },
        selected,
        Vec::new(),
    ))
}

/// Greedy cover over the binarized walk matrix: keep the top l_top
/// entries of each row of M^l_walk, repeatedly pick the candidate
/// covering the most remaining rows, zero those rows, and drop the
/// pick's k-hop neighborhood from the candidate pool.
pub fn select_gc_rwcs(
    g: &Graph,
    c: &SelectionConstraint,
    l_walk: usize,
    l_top: usize,
    k_hops: usize,
) -> Result<AttackPlan> {
    let candidates = c.candidates(g)?;
    if l_top == 0 {
        return Err(Error::invalid("gc-rwcs needs l_top >= 1"));
    }
    let walk = transition_matrix(g);

    // Per row: the column indices that survive binarization, plus the
    // transpose view (per column: which rows it appears in).
    let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); g.n()];
    let mut count: Vec<usize> = vec![0; g.n()];
    for j in 0..g.n() {
        let row = walk.walk_row(j, l_walk);
        let mut entries: Vec<(usize, f64)> =
            row.iter().copied().enumerate().filter(|&(_, v)| v > 0.0).collect();
        entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        entries.truncate(l_top);
        for (i, _) in entries {
            rows_of[i].push(j);
            count[i] += 1;
        }
    }

    let mut available: Vec<bool> = vec![false; g.n()];
    for &i in &candidates {
        available[i] = true;
    }
    let mut row_active: Vec<bool> = vec![true; g.n()];
    let mut selected = Vec::new();

    while selected.len() < c.r {
        let mut best: Option<usize> = None;
        for i in 0..g.n() {
            if !available[i] {
                continue;
            }
            if best.map_or(true, |b| count[i] > count[b]) {
                best = Some(i);
            }
        }
        let Some(pick) = best else { break };
        selected.push(pick);
        // Zero every row the pick covers, updating all column counts.
        for &j in &rows_of[pick].clone() {
            if !row_active[j] {
                continue;
            }
            row_active[j] = false;
            // Walk the binarized row again to decrement its columns.
            let row = walk.walk_row(j, l_walk);
            let mut entries: Vec<(usize, f64)> =
                row.iter().copied().enumerate().filter(|&(_, v)| v > 0.0).collect();
            entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            entries.truncate(l_top);
            for (i, _) in entries {
                count[i] -= 1;
            }
        }
        for i in g.k_hop_neighborhood(pick, k_hops) {
            available[i] = false;
        }
    }
    Ok(AttackPlan::assemble(
        g,
        c,
        Strategy::GcRwcs {
            l_walk,
            l_top,
            k_hops,
        },
        selected,
        Vec::new(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Degree,
    Betweenness,
    Pagerank,
    Random,
}

/// Centrality ranking (or a seeded uniform sample) over the candidates.
pub fn select_baseline(
    g: &Graph,
    c: &SelectionConstraint,
    kind: BaselineKind,
    seed: u64,
) -> Result<AttackPlan> {
    let candidates = c.candidates(g)?;
    let (strategy, selected) = match kind {
        BaselineKind::Random => {
            let mut rng = rng_from_seed(seed);
            let picked = rand::seq::index::sample(
                &mut rng,
                candidates.len(),
                c.r.min(candidates.len()),
            );
            (
                Strategy::Random { seed },
                picked.iter().map(|p| candidates[p]).collect(),
            )
        }
        _ => {
            let values = match kind {
                BaselineKind::Degree => degree_centrality(g).values,
                BaselineKind::Betweenness => betweenness_centrality(g).values,
                BaselineKind::Pagerank => {
                    pagerank_centrality(g, &PageRankConfig::default())?.values
                }
                BaselineKind::Random => unreachable!(),
            };
            let strategy = match kind {
                BaselineKind::Degree => Strategy::Degree,
                BaselineKind::Betweenness => Strategy::Betweenness,
                BaselineKind::Pagerank => Strategy::Pagerank,
                BaselineKind::Random => unreachable!(),
            };
            let scores: Vec<(usize, f64)> =
                candidates.iter().map(|&i| (i, values[i])).collect();
            (strategy, top_by_score(&scores, c.r))
        }
    };
    Ok(AttackPlan::assemble(g, c, strategy, selected, Vec::new()))
}

/// Highest-score-first selection, ties toward the smaller index; input
/// pairs must already be in ascending index order.
fn top_by_score(scores: &[(usize, f64)], r: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&p, &q| {
        scores[q].1.partial_cmp(&scores[p].1).unwrap().then(scores[p].0.cmp(&scores[q].0))
    });
    order.iter().take(r).map(|&p| scores[p].0).collect()
}
