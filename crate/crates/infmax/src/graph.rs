//! Undirected graphs, the self-inclusive random-walk matrix M, and its
//! powers B = M^L.
//!
//! Public invariants:
//! - CSR adjacency is symmetric, deduplicated, sorted per row, and stores
//!   no self-loops; self-loops exist only implicitly inside M.
//! - `degree(i)` is the self-inclusive neighborhood size |N_i| = deg(i) + 1.
//! - Each row of M sums to exactly 1: M_ij = 1/|N_i| for j adjacent to i
//!   or j = i, else 0.
//! - Internal node indices are assigned by sorting the external id tokens,
//!   so a graph built twice from the same inputs is bit-identical.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::sync::{Arc, Mutex};

use ndarray::Array2;

use crate::error::{Error, Result};

/// Undirected graph with optional node features and labels.
#[derive(Debug, Clone)]
pub struct Graph {
    node_ids: Vec<String>,
    index: HashMap<String, usize>,
    offsets: Vec<usize>,
    adj: Vec<usize>,
    features: Option<Array2<f64>>,
    labels: Option<Vec<usize>>,
}

impl Graph {
    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.node_ids.len()
    }

    /// Self-inclusive neighborhood size |N_i| = deg(i) + 1.
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i] + 1
    }

    /// Sorted neighbor indices of `i`, excluding `i` itself.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Number of undirected edges (unique unordered pairs, no self-loops).
    pub fn n_edges(&self) -> usize {
        self.adj.len() / 2
    }

    pub fn node_id(&self, i: usize) -> &str {
        &self.node_ids[i]
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn features(&self) -> Option<&Array2<f64>> {
        self.features.as_ref()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.features.as_ref().map(|x| x.ncols())
    }

    /// Number of classes, `max(label) + 1`.
    pub fn n_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|y| y.iter().copied().max().map_or(0, |m| m + 1))
    }

    /// Features and labels together, or an error naming what is missing.
    pub fn labeled_features(&self) -> Result<(&Array2<f64>, &[usize])> {
        match (self.features.as_ref(), self.labels.as_deref()) {
            (Some(x), Some(y)) => Ok((x, y)),
            (None, _) => Err(Error::invalid("graph has no node features")),
            (_, None) => Err(Error::invalid("graph has no node labels")),
        }
    }

    /// Nodes within `hops` BFS steps of `start`, including `start`.
    pub fn k_hop_neighborhood(&self, start: usize, hops: usize) -> Vec<usize> {
        let mut seen = vec![false; self.n()];
        let mut frontier = vec![start];
        seen[start] = true;
        for _ in 0..hops {
            let mut next = Vec::new();
            for &u in &frontier {
                for &v in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        (0..self.n()).filter(|&v| seen[v]).collect()
    }

    /// BFS hop distances from `start`; `None` for unreachable nodes.
    pub fn bfs_distances(&self, start: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        dist[start] = Some(0);
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in self.neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Construct from pre-indexed data, keeping node order as given.
    ///
    /// Used by synthetic generators where nodes are already meaningfully
    /// numbered; `build_graph` is the path for external data and sorts
    /// tokens instead.
    pub(crate) fn from_indexed(
        node_ids: Vec<String>,
        edges: &[(usize, usize)],
        features: Option<Array2<f64>>,
        labels: Option<Vec<usize>>,
    ) -> Result<Graph> {
        let n = node_ids.len();
        let mut index = HashMap::with_capacity(n);
        for (i, t) in node_ids.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate node id {t:?}")));
            }
        }
        let mut pairs = BTreeSet::new();
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if u != v {
                pairs.insert((u.min(v), u.max(v)));
            }
        }
        if let Some(x) = &features {
            if x.nrows() != n {
                return Err(Error::invalid(format!(
                    "feature matrix has {} rows for {} nodes",
                    x.nrows(),
                    n
                )));
            }
        }
        if let Some(y) = &labels {
            if y.len() != n {
                return Err(Error::invalid(format!(
                    "label vector has {} entries for {} nodes",
                    y.len(),
                    n
                )));
            }
        }
        let mut neighbor_lists = vec![Vec::new(); n];
        for &(u, v) in &pairs {
            neighbor_lists[u].push(v);
            neighbor_lists[v].push(u);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut adj = Vec::with_capacity(2 * pairs.len());
        offsets.push(0);
        for mut list in neighbor_lists {
            list.sort_unstable();
            adj.extend_from_slice(&list);
            offsets.push(adj.len());
        }
        Ok(Graph {
            node_ids,
            index,
            offsets,
            adj,
            features,
            labels,
        })
    }
}

/// Build a graph from an edge list of external id tokens, with optional
/// per-token features and labels.
///
/// The node set is discovered as follows: if features are given, their
/// tokens define it and every edge endpoint must appear among them;
/// otherwise, if labels are given, their tokens define it the same way;
/// otherwise the node set is exactly the tokens seen in the edge list.
/// When both features and labels are present they must cover the same
/// tokens. Internal indices follow the sorted order of the tokens.
/// Duplicate edges and both orientations collapse to one undirected edge;
/// self-loop lines are dropped (the self-loop lives inside M).
pub fn build_graph(
    edges: &[(String, String)],
    features: Option<&[(String, Vec<f64>)]>,
    labels: Option<&[(String, usize)]>,
) -> Result<Graph> {
    let mut tokens: BTreeSet<&str> = BTreeSet::new();
    if let Some(rows) = features {
        for (t, _) in rows {
            if !tokens.insert(t) {
                return Err(Error::invalid(format!("duplicate feature row for node {t:?}")));
            }
        }
    } else if let Some(rows) = labels {
        for (t, _) in rows {
            if !tokens.insert(t) {
                return Err(Error::invalid(format!("duplicate label for node {t:?}")));
            }
        }
    } else {
        for (u, v) in edges {
            tokens.insert(u);
            tokens.insert(v);
        }
    }

    let node_ids: Vec<String> = tokens.iter().map(|t| t.to_string()).collect();
    let index: HashMap<&str, usize> = tokens.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    let n = node_ids.len();

    let closed = features.is_some() || labels.is_some();
    let mut indexed_edges = Vec::with_capacity(edges.len());
    for (u, v) in edges {
        let (ui, vi) = match (index.get(u.as_str()), index.get(v.as_str())) {
            (Some(&a), Some(&b)) => (a, b),
            _ => {
                debug_assert!(closed);
                let missing = if index.contains_key(u.as_str()) { v } else { u };
                return Err(Error::invalid(format!(
                    "edge ({u:?}, {v:?}) references node {missing:?} absent from the given node attributes"
                )));
            }
        };
        indexed_edges.push((ui, vi));
    }

    let feature_matrix = match features {
        None => None,
        Some(rows) => {
            let dim = rows.first().map_or(0, |(_, r)| r.len());
            let mut x = Array2::zeros((n, dim));
            for (t, row) in rows {
                if row.len() != dim {
                    return Err(Error::invalid(format!(
                        "feature row for node {t:?} has {} values, expected {dim}",
                        row.len()
                    )));
                }
                let i = index[t.as_str()];
                for (d, &v) in row.iter().enumerate() {
                    x[[i, d]] = v;
                }
            }
            Some(x)
        }
    };

    let label_vec = match labels {
        None => None,
        Some(rows) => {
            if features.is_some() {
                let mut seen = vec![false; n];
                for (t, _) in rows {
                    match index.get(t.as_str()) {
                        Some(&i) if !seen[i] => seen[i] = true,
                        Some(_) => {
                            return Err(Error::invalid(format!("duplicate label for node {t:?}")))
                        }
                        None => {
                            return Err(Error::invalid(format!(
                                "label for node {t:?} which has no feature row"
                            )))
                        }
                    }
                }
                if let Some(i) = seen.iter().position(|s| !s) {
                    return Err(Error::invalid(format!(
                        "node {:?} has features but no label ({} labels for {} nodes)",
                        node_ids[i],
                        rows.len(),
                        n
                    )));
                }
            }
            let mut y = vec![0usize; n];
            for (t, c) in rows {
                y[index[t.as_str()]] = *c;
            }
            Some(y)
        }
    };

    Graph::from_indexed(node_ids, &indexed_edges, feature_matrix, label_vec)
}

/// Load a whitespace-separated edge list; `#` starts a comment line and
/// blank lines are skipped.
pub fn load_edge_list(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some(u), Some(v), None) => edges.push((u.to_string(), v.to_string())),
            _ => {
                return Err(Error::parse(
                    path,
                    ln + 1,
                    format!("expected two whitespace-separated tokens, got {line:?}"),
                ))
            }
        }
    }
    Ok(edges)
}

/// Load a feature CSV: first column node token, remaining columns reals.
pub fn load_features(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cells = line.split(',');
        let token = cells.next().unwrap().trim().to_string();
        let mut values = Vec::new();
        for cell in cells {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::parse(path, ln + 1, format!("not a real number: {cell:?}"))
            })?;
            values.push(v);
        }
        rows.push((token, values));
    }
    Ok(rows)
}

/// Load a label CSV of `token,class` rows.
pub fn load_labels(path: &Path) -> Result<Vec<(String, usize)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cells = line.split(',');
        match (cells.next(), cells.next(), cells.next()) {
            (Some(t), Some(c), None) => {
                let class: usize = c.trim().parse().map_err(|_| {
                    Error::parse(path, ln + 1, format!("not a class index: {c:?}"))
                })?;
                rows.push((t.trim().to_string(), class));
            }
            _ => {
                return Err(Error::parse(path, ln + 1, "expected token,class".to_string()));
            }
        }
    }
    Ok(rows)
}

/// Row-stochastic random-walk matrix with implicit self-loops, stored as
/// CSR. Row i holds 1/|N_i| at each neighbor of i and at i itself.
#[derive(Debug, Clone)]
pub struct RandomWalkMatrix {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Build M from a graph.
pub fn transition_matrix(g: &Graph) -> RandomWalkMatrix {
    let n = g.n();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(g.adj.len() + n);
    let mut vals = Vec::with_capacity(g.adj.len() + n);
    offsets.push(0);
    for i in 0..n {
        let w = 1.0 / g.degree(i) as f64;
        let mut placed_self = false;
        for &j in g.neighbors(i) {
            if !placed_self && j > i {
                cols.push(i);
                vals.push(w);
                placed_self = true;
            }
            cols.push(j);
            vals.push(w);
        }
        if !placed_self {
            cols.push(i);
            vals.push(w);
        }
        offsets.push(cols.len());
    }
    RandomWalkMatrix {
        n,
        offsets,
        cols,
        vals,
    }
}

impl RandomWalkMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Entries of row `i` as parallel (columns, values) slices.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.offsets[i]..self.offsets[i + 1];
        (&self.cols[span.clone()], &self.vals[span])
    }

    /// y = M x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &w) in cols.iter().zip(vals) {
                acc += w * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// y = M^T x.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &w) in cols.iter().zip(vals) {
                y[j] += w * x[i];
            }
        }
        y
    }

    /// Y = M X for a dense (n, d) matrix.
    pub fn apply_dense(&self, x: &Array2<f64>) -> Array2<f64> {
        debug_assert_eq!(x.nrows(), self.n);
        let mut y = Array2::zeros(x.raw_dim());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut out = y.row_mut(i);
            for (&j, &w) in cols.iter().zip(vals) {
                out.scaled_add(w, &x.row(j));
            }
        }
        y
    }

    /// Y = M^T X for a dense (n, d) matrix.
    pub fn apply_transpose_dense(&self, x: &Array2<f64>) -> Array2<f64> {
        debug_assert_eq!(x.nrows(), self.n);
        let mut y = Array2::zeros(x.raw_dim());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let row_i = x.row(i);
            for (&j, &w) in cols.iter().zip(vals) {
                y.row_mut(j).scaled_add(w, &row_i);
            }
        }
        y
    }

    /// Column i of M^power, i.e. M^power e_i, computed by repeated sparse
    /// application; the dense power matrix is never materialized.
    pub fn walk_column(&self, i: usize, power: usize) -> Vec<f64> {
        let mut col = vec![0.0; self.n];
        col[i] = 1.0;
        for _ in 0..power {
            col = self.apply(&col);
        }
        col
    }

    /// Row j of M^power, via (M^T)^power e_j.
    pub fn walk_row(&self, j: usize, power: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.n];
        row[j] = 1.0;
        for _ in 0..power {
            row = self.apply_transpose(&row);
        }
        row
    }
}

/// Columns of B = M^L for a fixed candidate set, computed lazily on first
/// use and cached. Entry `column(i)[j]` is B_ji, the influence of seed i
/// on target j.
pub struct InfluenceMatrix<'m> {
    walk: &'m RandomWalkMatrix,
    power: usize,
    candidates: Vec<usize>,
    is_candidate: Vec<bool>,
    cache: Mutex<BTreeMap<usize, Arc<Vec<f64>>>>,
}

/// Restrict B = M^L to the given candidate columns.
pub fn influence_columns<'m>(
    m: &'m RandomWalkMatrix,
    candidates: &[usize],
    power: usize,
) -> Result<InfluenceMatrix<'m>> {
    let mut is_candidate = vec![false; m.n()];
    let mut sorted = Vec::with_capacity(candidates.len());
    for &c in candidates {
        if c >= m.n() {
            return Err(Error::invalid(format!(
                "candidate {c} out of range for {} nodes",
                m.n()
            )));
        }
        if !is_candidate[c] {
            is_candidate[c] = true;
            sorted.push(c);
        }
    }
    sorted.sort_unstable();
    Ok(InfluenceMatrix {
        walk: m,
        power,
        candidates: sorted,
        is_candidate,
        cache: Mutex::new(BTreeMap::new()),
    })
}

impl InfluenceMatrix<'_> {
    pub fn n_targets(&self) -> usize {
        self.walk.n()
    }

    pub fn power(&self) -> usize {
        self.power
    }

    /// Sorted candidate seed indices.
    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    /// The column B_{., i}; errors for non-candidate i. Insertion into the
    /// cache is serialized, so concurrent readers are safe.
    pub fn column(&self, i: usize) -> Result<Arc<Vec<f64>>> {
        if i >= self.is_candidate.len() || !self.is_candidate[i] {
            return Err(Error::invalid(format!(
                "node {i} is not in the candidate set of this influence matrix"
            )));
        }
        let mut cache = self.cache.lock().unwrap();
        if let Some(col) = cache.get(&i) {
            return Ok(Arc::clone(col));
        }
        let col = Arc::new(self.walk.walk_column(i, self.power));
        cache.insert(i, Arc::clone(&col));
        Ok(col)
    }

    /// Per-target load sum_{i in s} B_ji; `s` must hold distinct candidates.
    pub fn load(&self, s: &[usize]) -> Result<Vec<f64>> {
        check_distinct(s)?;
        let mut load = vec![0.0; self.n_targets()];
        for &i in s {
            let col = self.column(i)?;
            for (l, &b) in load.iter_mut().zip(col.iter()) {
                *l += b;
            }
        }
        Ok(load)
    }
}

pub(crate) fn check_distinct(s: &[usize]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for &i in s {
        if !seen.insert(i) {
            return Err(Error::invalid(format!("node {i} appears twice in the seed set")));
        }
    }
    Ok(())
}
