//! Structural centrality baselines: degree, betweenness, PageRank.
//!
//! Conventions:
//! - Degree centrality is self-inclusive: C_D(i) = |N_i| / N = (deg(i)+1)/N.
//! - Betweenness sums g_jk(i)/g_jk over unordered pairs {j, k} with
//!   j != i != k (no pair normalization).
//! - PageRank uses the standard self-loop-free walk; the self-inclusive
//!   variant is available behind `PageRankConfig::count_self_loops`.
//!   Dangling nodes distribute their mass uniformly.

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CentralityKind {
    Degree,
    Betweenness,
    PageRank,
}

/// A per-node score vector tagged with the measure that produced it.
#[derive(Debug, Clone)]
pub struct CentralityScores {
    pub kind: CentralityKind,
    pub values: Vec<f64>,
}

/// C_D(i) = |N_i| / N.
pub fn degree_centrality(g: &Graph) -> CentralityScores {
    let n = g.n() as f64;
    let values = (0..g.n()).map(|i| g.degree(i) as f64 / n).collect();
    CentralityScores {
        kind: CentralityKind::Degree,
        values,
    }
}

/// Brandes' algorithm for shortest-path betweenness on the unweighted
/// undirected graph. Accumulating over ordered sources counts every
/// unordered pair twice, hence the final halving.
pub fn betweenness_centrality(g: &Graph) -> CentralityScores {
    let n = g.n();
    let mut values = vec![0.0; n];
    let mut stack: Vec<usize> = Vec::with_capacity(n);
    for s in 0..n {
        stack.clear();
        let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![usize::MAX; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    pred[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0f64; n];
        while let Some(w) = stack.pop() {
            for &v in &pred[w] {
                // sigma[w] > 0 whenever w was reached, so the division is safe.
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                values[w] += delta[w];
            }
        }
    }
    for v in &mut values {
        *v /= 2.0;
    }
    CentralityScores {
        kind: CentralityKind::Betweenness,
        values,
    }
}

#[derive(Debug, Clone)]
pub struct PageRankConfig {
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Treat the implicit self-loop as a real out-edge. Off by default:
    /// the walk ignores self-loops, matching the usual PageRank.
    pub count_self_loops: bool,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        PageRankConfig {
            alpha: 0.85,
            tol: 1e-12,
            max_iter: 10_000,
            count_self_loops: false,
        }
    }
}

/// Power iteration for PR(i) = (1-alpha)/N + alpha * sum_j PR(j)/outdeg(j)
/// over in-neighbors j. Stops when the max-norm change drops below `tol`;
/// non-convergence within `max_iter` is an error carrying the residual.
pub fn pagerank_centrality(g: &Graph, cfg: &PageRankConfig) -> Result<CentralityScores> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::invalid(format!(
            "pagerank damping alpha must lie in (0, 1), got {}",
            cfg.alpha
        )));
    }
    let n = g.n();
    if n == 0 {
        return Err(Error::invalid("pagerank on an empty graph"));
    }
    let nf = n as f64;
    let outdeg: Vec<f64> = (0..n)
        .map(|i| {
            let d = g.neighbors(i).len() + usize::from(cfg.count_self_loops);
            d as f64
        })
        .collect();
    let mut x = vec![1.0 / nf; n];
    let mut prev_l1_residual = f64::INFINITY;
    for iter in 0..cfg.max_iter {
        let dangling: f64 = (0..n)
            .filter(|&i| outdeg[i] == 0.0)
            .map(|i| x[i])
            .sum();
        let base = (1.0 - cfg.alpha) / nf + cfg.alpha * dangling / nf;
        let mut next = vec![base; n];
        for j in 0..n {
            if outdeg[j] == 0.0 {
                continue;
            }
            let share = cfg.alpha * x[j] / outdeg[j];
            for &i in g.neighbors(j) {
                next[i] += share;
            }
            if cfg.count_self_loops {
                next[j] += share;
            }
        }
        let max_change = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let l1_residual: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        // The iteration map contracts the L1 distance by alpha, so the
        // residual must shrink after the first step; a rise means a bug.
        assert!(
            iter == 0 || l1_residual <= prev_l1_residual * (1.0 + 1e-9) + 1e-300,
            "pagerank residual increased: {l1_residual} after {prev_l1_residual}"
        );
        prev_l1_residual = l1_residual;
        x = next;
        if max_change < cfg.tol {
            return Ok(CentralityScores {
                kind: CentralityKind::PageRank,
                values: x,
            });
        }
    }
    Err(Error::Numeric(format!(
        "pagerank did not converge within {} iterations (last residual {prev_l1_residual:.3e})",
        cfg.max_iter
    )))
}
