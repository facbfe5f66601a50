//! Linearized surrogate of a ReLU GCN.
//!
//! Replacing each hidden ReLU by its activation probability turns the
//! network into a linear map: H-bar = rho * M^L X W^T with
//! W = W^(L) ... W^(1). Adding a fixed perturbation eps to the features
//! of a seed set S then shifts node j's logits by load_j * (W eps),
//! where load_j = sum_{i in S} [M^L]_ji, so "does S misclassify j"
//! reduces to comparing load_j against a per-node threshold theta_j.
//!
//! Public invariants:
//! * the final layer carries no activation scaling; rho is the full
//!   path probability and multiplies the logits once at the end.
//! * argmax ties resolve to the smallest class index everywhere.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::{transition_matrix, Graph};

/// Stack of per-layer weight matrices, each shaped (out, in), plus the
/// path activation probability rho in (0, 1].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "ModelWire", into = "ModelWire")]
pub struct SurrogateModel {
    layers: Vec<Array2<f64>>,
    rho: f64,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct LayerWire {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct ModelWire {
    layers: Vec<LayerWire>,
    rho: f64,
}

impl From<SurrogateModel> for ModelWire {
    fn from(m: SurrogateModel) -> ModelWire {
        ModelWire {
            layers: m
                .layers
                .iter()
                .map(|w| LayerWire {
                    rows: w.nrows(),
                    cols: w.ncols(),
                    data: w.iter().copied().collect(),
                })
                .collect(),
            rho: m.rho,
        }
    }
}

impl TryFrom<ModelWire> for SurrogateModel {
    type Error = Error;

    fn try_from(w: ModelWire) -> Result<SurrogateModel> {
        let mut layers = Vec::with_capacity(w.layers.len());
        for l in w.layers {
            if l.data.len() != l.rows * l.cols {
                return Err(Error::invalid(format!(
                    "layer data length {} does not match {}x{}",
                    l.data.len(),
                    l.rows,
                    l.cols
                )));
            }
            let arr = Array2::from_shape_vec((l.rows, l.cols), l.data)
                .map_err(|e| Error::invalid(e.to_string()))?;
            layers.push(arr);
        }
        SurrogateModel::new(layers, w.rho)
    }
}

impl SurrogateModel {
    /// Layers in application order: layer 0 consumes the D input features,
    /// the last produces the K class logits. Adjacent shapes must chain.
    pub fn new(layers: Vec<Array2<f64>>, rho: f64) -> Result<SurrogateModel> {
        if layers.is_empty() {
            return Err(Error::invalid("surrogate model needs at least one layer"));
        }
        for (l, pair) in layers.windows(2).enumerate() {
            if pair[1].ncols() != pair[0].nrows() {
                return Err(Error::invalid(format!(
                    "layer {} outputs {} units but layer {} expects {}",
                    l,
                    pair[0].nrows(),
                    l + 1,
                    pair[1].ncols()
                )));
            }
        }
        if !(rho.is_finite() && rho > 0.0 && rho <= 1.0) {
            return Err(Error::invalid(format!(
                "activation probability rho must lie in (0, 1], got {rho}"
            )));
        }
        Ok(SurrogateModel { layers, rho })
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].nrows()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn layers(&self) -> &[Array2<f64>] {
        &self.layers
    }

    /// Collapsed weight W = rho * W^(L) ... W^(1), shaped (K, D).
    pub fn effective_weight(&self) -> Array2<f64> {
        let mut w = self.layers[0].clone();
        for layer in &self.layers[1..] {
            w = layer.dot(&w);
        }
        w * self.rho
    }

    /// Expected logits H-bar: each layer propagates with M and applies its
    /// weights; the hidden activation probabilities collapse into the
    /// single rho factor, which commutes to the end as a scalar.
    pub fn expected_forward(&self, g: &Graph, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.nrows() != g.n() || x.ncols() != self.in_dim() {
            return Err(Error::invalid(format!(
                "features are {}x{} but the model over this graph needs {}x{}",
                x.nrows(),
                x.ncols(),
                g.n(),
                self.in_dim()
            )));
        }
        let walk = transition_matrix(g);
        let mut h = x.clone();
        for layer in &self.layers {
            h = walk.apply_dense(&h);
            h = h.dot(&layer.t());
        }
        Ok(h * self.rho)
    }
}

/// Row-wise argmax with ties to the smallest class index.
pub fn predictions(logits: &Array2<f64>) -> Vec<usize> {
    logits
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Per-node misclassification thresholds and their ingredients.
///
/// For node j with label y_j, the gap to class k after loading s is
/// margin_k - s * denom_k with margin_k = H-bar_{j,y}(0) - H-bar_{j,k}(0)
/// and denom_k = (W_k - W_y)^T eps. theta_j is the smallest load at which
/// some competing gap closes, or infinity when no perturbation direction
/// can close any gap.
#[derive(Debug, Clone)]
pub struct ThetaReport {
    /// Flip threshold per node; infinite when the node cannot flip.
    pub theta: Vec<f64>,
    /// Competing class behind theta: the first class to overtake y_j, or
    /// the strongest clean competitor when theta is infinite.
    pub khat: Vec<usize>,
    /// Clean logit gap to `khat`.
    pub logit_margin: Vec<f64>,
    /// Perturbation alignment (W_khat - W_y)^T eps.
    pub denom: Vec<f64>,
}

pub fn compute_theta(
    model: &SurrogateModel,
    g: &Graph,
    x: &Array2<f64>,
    y: &[usize],
    epsilon: &[f64],
) -> Result<ThetaReport> {
    let k_classes = model.out_dim();
    if k_classes < 2 {
        return Err(Error::invalid("thresholds need at least two classes"));
    }
    if y.len() != g.n() {
        return Err(Error::invalid(format!(
            "{} labels for {} nodes",
            y.len(),
            g.n()
        )));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= k_classes) {
        return Err(Error::invalid(format!(
            "label {bad} outside the model's {k_classes} classes"
        )));
    }
    if epsilon.len() != model.in_dim() {
        return Err(Error::invalid(format!(
            "perturbation has {} entries but features have {}",
            epsilon.len(),
            model.in_dim()
        )));
    }

    let clean = model.expected_forward(g, x)?;
    let w_eff = model.effective_weight();
    // w_eps[k] = W_k^T eps: how fast class k's logit grows per unit load.
    let w_eps: Vec<f64> = w_eff
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(epsilon).map(|(w, e)| w * e).sum())
        .collect();

    let n = g.n();
    let mut theta = vec![f64::INFINITY; n];
    let mut khat = vec![0usize; n];
    let mut logit_margin = vec![0.0; n];
    let mut denom = vec![0.0; n];

    for j in 0..n {
        let yj = y[j];
        let row = clean.row(j);
        // Strongest clean competitor, ties to the smallest class.
        let mut strongest = usize::MAX;
        for k in 0..k_classes {
            if k == yj {
                continue;
            }
            if strongest == usize::MAX || row[k] > row[strongest] {
                strongest = k;
            }
        }
        let margin_of = |k: usize| row[yj] - row[k];
        let denom_of = |k: usize| w_eps[k] - w_eps[yj];

        if denom_of(strongest) > 0.0 {
            khat[j] = strongest;
        } else {
            // The strongest competitor moves the wrong way under eps; the
            // class that actually overtakes y first is the one with the
            // smallest crossing load among those gaining on y.
            let mut fallback = usize::MAX;
            for k in 0..k_classes {
                if k == yj || denom_of(k) <= 0.0 {
                    continue;
                }
                if fallback == usize::MAX
                    || margin_of(k) / denom_of(k) < margin_of(fallback) / denom_of(fallback)
                {
                    fallback = k;
                }
            }
            khat[j] = if fallback != usize::MAX { fallback } else { strongest };
        }
        logit_margin[j] = margin_of(khat[j]);
        denom[j] = denom_of(khat[j]);
        if denom[j] > 0.0 {
            theta[j] = logit_margin[j] / denom[j];
        }
    }

    Ok(ThetaReport {
        theta,
        khat,
        logit_margin,
        denom,
    })
}

/// Outcome of the dual-path misclassification check on one seed set.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub n_nodes: usize,
    /// Nodes whose load sits within 1e-9 of theta; excluded from the
    /// indicator comparison as numerical ties.
    pub ties: Vec<usize>,
    /// Non-tie nodes where the two indicators disagree.
    pub violations: Vec<usize>,
    /// Worst entrywise mismatch of the linearity identity, relative to
    /// max(1, |entry|).
    pub max_linearity_error: f64,
    /// Misclassification counts on each path (over all nodes).
    pub flips_forward: usize,
    pub flips_threshold: usize,
}

/// Check, for every node, that "argmax of the perturbed forward differs
/// from y" agrees with "load exceeds theta", and that the perturbed
/// logits equal clean logits + load * (W eps) entrywise.
pub fn verify_equivalence(
    model: &SurrogateModel,
    g: &Graph,
    x: &Array2<f64>,
    y: &[usize],
    epsilon: &[f64],
    s: &[usize],
    l_walk: usize,
) -> Result<EquivalenceReport> {
    if l_walk != model.n_layers() {
        return Err(Error::invalid(format!(
            "walk length {l_walk} must match the model depth {}",
            model.n_layers()
        )));
    }
    let report = compute_theta(model, g, x, y, epsilon)?;

    // Forward path: perturb the seed rows and rerun the surrogate.
    let mut perturbed = x.clone();
    for &i in s {
        if i >= g.n() {
            return Err(Error::invalid(format!("seed {i} out of range")));
        }
        let mut row = perturbed.row_mut(i);
        for (v, e) in row.iter_mut().zip(epsilon) {
            *v += e;
        }
    }
    let clean = model.expected_forward(g, x)?;
    let shifted = model.expected_forward(g, &perturbed)?;
    let predicted = predictions(&shifted);

    // Threshold path: per-node load through the walk matrix.
    let walk = transition_matrix(g);
    let mut load = vec![0.0; g.n()];
    crate::graph::check_distinct(s)?;
    for &i in s {
        let col = walk.walk_column(i, l_walk);
        for (l, c) in load.iter_mut().zip(col) {
            *l += c;
        }
    }

    let w_eff = model.effective_weight();
    let w_eps: Vec<f64> = w_eff
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(epsilon).map(|(w, e)| w * e).sum())
        .collect();

    let mut max_linearity_error = 0.0f64;
    for j in 0..g.n() {
        for k in 0..model.out_dim() {
            let predicted_entry = clean[(j, k)] + load[j] * w_eps[k];
            let actual = shifted[(j, k)];
            let scale = 1.0f64.max(actual.abs()).max(predicted_entry.abs());
            max_linearity_error = max_linearity_error.max((actual - predicted_entry).abs() / scale);
        }
    }

    let mut ties = Vec::new();
    let mut violations = Vec::new();
    let mut flips_forward = 0;
    let mut flips_threshold = 0;
    for j in 0..g.n() {
        let by_forward = predicted[j] != y[j];
        let by_threshold = load[j] > report.theta[j];
        flips_forward += by_forward as usize;
        flips_threshold += by_threshold as usize;
        if (load[j] - report.theta[j]).abs() < 1e-9 {
            ties.push(j);
            continue;
        }
        if by_forward != by_threshold {
            violations.push(j);
        }
    }

    Ok(EquivalenceReport {
        n_nodes: g.n(),
        ties,
        violations,
        max_linearity_error,
        flips_forward,
        flips_threshold,
    })
}

/// Per-node threshold samples across independently trained models,
/// with a shape diagnostic for how the samples distribute.
#[derive(Debug)]
pub struct ThetaHistogram {
    /// One row per node, one retained trial per column.
    pub samples: Vec<Vec<f64>>,
    /// Trials dropped because training diverged.
    pub n_failed: usize,
    /// Whether the node's histogram over positive thresholds is
    /// non-increasing; `None` when too few finite samples exist to bin.
    pub monotone: Vec<Option<bool>>,
}

impl ThetaHistogram {
    /// Fraction of binnable nodes whose positive-side density never
    /// increases from one bin to the next.
    pub fn monotone_fraction(&self) -> Option<f64> {
        let assessed = self.monotone.iter().flatten().count();
        let hold = self.monotone.iter().flatten().filter(|&&m| m).count();
        (assessed > 0).then(|| hold as f64 / assessed as f64)
    }

    /// One CSV row per node: id, then every retained sample with
    /// infinities spelled out.
    pub fn samples_csv(&self, g: &Graph) -> String {
        let mut out = String::from("node_id,theta_samples\n");
        for (i, row) in self.samples.iter().enumerate() {
            out.push_str(g.node_id(i));
            for &v in row {
                if v == f64::INFINITY {
                    out.push_str(",inf");
                } else if v == f64::NEG_INFINITY {
                    out.push_str(",-inf");
                } else {
                    out.push_str(&format!(",{v}"));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn diagnostic_csv(&self, g: &Graph) -> String {
        let mut out = String::from("node_id,finite_samples,density_non_increasing\n");
        for (i, row) in self.samples.iter().enumerate() {
            let finite = row.iter().filter(|v| v.is_finite()).count();
            let verdict = match self.monotone[i] {
                Some(true) => "yes",
                Some(false) => "no",
                None => "skipped",
            };
            out.push_str(&format!("{},{finite},{verdict}\n", g.node_id(i)));
        }
        out
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Bin the node's finite samples at the Freedman-Diaconis width and
/// report whether the counts over the positive bins never increase.
fn positive_density_non_increasing(samples: &[f64]) -> Option<bool> {
    let mut finite: Vec<f64> = samples.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() < 4 {
        return None;
    }
    finite.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let iqr = quantile(&finite, 0.75) - quantile(&finite, 0.25);
    let width = 2.0 * iqr / (finite.len() as f64).cbrt();
    if !(width > 0.0) {
        return None;
    }
    let positive: Vec<f64> = finite.into_iter().filter(|&v| v > 0.0).collect();
    let max = match positive.last() {
        Some(&m) => m,
        None => return None,
    };
    if max / width > 1e6 {
        return None;
    }
    let mut counts = vec![0usize; (max / width).floor() as usize + 1];
    for &v in &positive {
        let mut bin = (v / width).floor() as usize;
        bin = bin.min(counts.len() - 1);
        counts[bin] += 1;
    }
    Some(counts.windows(2).all(|w| w[0] >= w[1]))
}

/// Train `trials` victim models on seeds derived from `rng_seed`,
/// convert each to a surrogate with rho = 1, and collect the per-node
/// flip thresholds. Diverged trainings are skipped and counted.
pub fn theta_histogram(
    g: &Graph,
    x: &Array2<f64>,
    y: &[usize],
    epsilon: &[f64],
    config: &crate::victim::TrainConfig,
    trials: usize,
    rng_seed: u64,
) -> Result<ThetaHistogram> {
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let mut samples = vec![Vec::new(); g.n()];
    let mut n_failed = 0usize;
    for trial in 0..trials {
        let seed = crate::rng::derive_seed(rng_seed, crate::rng::streams::THETA_TRIAL, trial as u64);
        let split = crate::victim::random_split(g.n(), 0.6, 0.2, seed)?;
        let trial_config = crate::victim::TrainConfig { seed, ..*config };
        let model = match crate::victim::train(g, &split, &trial_config) {
            Ok(m) => m,
            Err(Error::Numeric(msg)) => {
                log::warn!("threshold trial {trial} diverged and was dropped: {msg}");
                n_failed += 1;
                continue;
            }
            Err(other) => return Err(other),
        };
        let report = compute_theta(&model.to_surrogate(), g, x, y, epsilon)?;
        for (node, theta) in report.theta.into_iter().enumerate() {
            samples[node].push(theta);
        }
    }
    if trials > n_failed {
        let monotone = samples.iter().map(|s| positive_density_non_increasing(s)).collect();
        Ok(ThetaHistogram { samples, n_failed, monotone })
    } else {
        Err(Error::Numeric(format!("all {trials} threshold trials diverged")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::rng::rng_from_seed;
    use rand::RngExt;

    fn path_graph(n: usize) -> Graph {
        let edges: Vec<(String, String)> = (0..n - 1)
            .map(|i| (format!("n{i:02}"), format!("n{:02}", i + 1)))
            .collect();
        build_graph(&edges, None, None).unwrap()
    }

    fn random_graph(seed: u64, n: usize, p: f64) -> Graph {
        let mut rng = rng_from_seed(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random_range(0.0..1.0) < p {
                    edges.push((format!("n{i:02}"), format!("n{j:02}")));
                }
            }
        }
        // Thread a path through so nothing is isolated.
        for i in 0..n - 1 {
            edges.push((format!("n{i:02}"), format!("n{:02}", i + 1)));
        }
        build_graph(&edges, None, None).unwrap()
    }

    fn random_matrix(rng: &mut impl RngExt, rows: usize, cols: usize) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn one_layer_forward_is_aggregation_times_weights() {
        let g = path_graph(4);
        let mut rng = rng_from_seed(5);
        let x = random_matrix(&mut rng, 4, 3);
        let w = random_matrix(&mut rng, 2, 3);
        let model = SurrogateModel::new(vec![w.clone()], 1.0).unwrap();
        let h = model.expected_forward(&g, &x).unwrap();
        let direct = transition_matrix(&g).apply_dense(&x).dot(&w.t());
        for (a, b) in h.iter().zip(direct.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_weights_give_zero_logits() {
        let g = path_graph(3);
        let x = Array2::from_elem((3, 2), 1.5);
        let model = SurrogateModel::new(vec![Array2::zeros((4, 2)), Array2::zeros((2, 4))], 0.5)
            .unwrap();
        let h = model.expected_forward(&g, &x).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn expected_forward_matches_bernoulli_mask_average() {
        // Independent oracle: sample ReLU masks entrywise with probability
        // gamma and average the masked linear forwards. With one hidden
        // layer the surrogate's rho equals gamma.
        let g = random_graph(11, 8, 0.3);
        let mut rng = rng_from_seed(12);
        let x = random_matrix(&mut rng, 8, 3);
        let w1 = random_matrix(&mut rng, 4, 3);
        let w2 = random_matrix(&mut rng, 2, 4);
        let gamma = 0.7;
        let model = SurrogateModel::new(vec![w1.clone(), w2.clone()], gamma).unwrap();
        let expected = model.expected_forward(&g, &x).unwrap();

        let walk = transition_matrix(&g);
        let trials = 100_000;
        let mut sum = Array2::<f64>::zeros((8, 2));
        let mut sum_sq = Array2::<f64>::zeros((8, 2));
        let mut mask_rng = rng_from_seed(13);
        for _ in 0..trials {
            let h1 = walk.apply_dense(&x).dot(&w1.t());
            let masked = h1.map(|&v| if mask_rng.random_range(0.0..1.0) < gamma { v } else { 0.0 });
            let out = walk.apply_dense(&masked).dot(&w2.t());
            sum += &out;
            sum_sq += &out.map(|v| v * v);
        }
        let n = trials as f64;
        for j in 0..8 {
            for k in 0..2 {
                let mean = sum[(j, k)] / n;
                let var = (sum_sq[(j, k)] / n - mean * mean).max(0.0);
                let se = (var / n).sqrt();
                assert!(
                    (mean - expected[(j, k)]).abs() <= 3.0 * se.max(1e-6),
                    "entry ({j},{k}): mc {mean} vs expected {}",
                    expected[(j, k)]
                );
            }
        }
    }

    #[test]
    fn model_rejects_incompatible_shapes() {
        assert!(SurrogateModel::new(vec![Array2::zeros((4, 3)), Array2::zeros((2, 5))], 1.0)
            .is_err());
        assert!(SurrogateModel::new(vec![Array2::zeros((2, 2))], 0.0).is_err());
        assert!(SurrogateModel::new(vec![], 1.0).is_err());
        let g = path_graph(3);
        let model = SurrogateModel::new(vec![Array2::zeros((2, 5))], 1.0).unwrap();
        assert!(model.expected_forward(&g, &Array2::zeros((3, 4))).is_err());
    }

    #[test]
    fn zero_perturbation_means_no_node_can_flip() {
        let g = path_graph(5);
        let mut rng = rng_from_seed(21);
        let x = random_matrix(&mut rng, 5, 3);
        let w = random_matrix(&mut rng, 3, 3);
        let model = SurrogateModel::new(vec![w], 1.0).unwrap();
        let y = vec![0, 1, 2, 0, 1];
        let report = compute_theta(&model, &g, &x, &y, &[0.0, 0.0, 0.0]).unwrap();
        assert!(report.theta.iter().all(|t| t.is_infinite()));
        assert!(report.denom.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn hand_checked_two_class_threshold() {
        // Single node with a self-referential walk: H-bar = X W^T.
        let g = build_graph(&[("a".into(), "a".into())], None, None);
        // A lone self-loop is dropped, leaving a single-node graph.
        let g = g.unwrap();
        assert_eq!(g.n(), 1);
        let x = ndarray::array![[1.0, 0.0]];
        let w = ndarray::array![[0.3, 0.0], [0.0, 0.1]];
        let model = SurrogateModel::new(vec![w], 1.0).unwrap();
        let report = compute_theta(&model, &g, &x, &[0], &[0.0, 1.0]).unwrap();
        // Clean logits (0.3, 0.0): margin 0.3; eps feeds class 1 at rate
        // 0.1 per unit load, so the flip lands at load 3.
        assert!((report.theta[0] - 3.0).abs() < 1e-12);
        assert_eq!(report.khat[0], 1);
        assert!((report.logit_margin[0] - 0.3).abs() < 1e-12);
        assert!((report.denom[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn theta_ignores_rho_rescaling() {
        let g = random_graph(31, 9, 0.3);
        let mut rng = rng_from_seed(32);
        let x = random_matrix(&mut rng, 9, 4);
        let w1 = random_matrix(&mut rng, 5, 4);
        let w2 = random_matrix(&mut rng, 3, 5);
        let eps: Vec<f64> = (0..4).map(|_| rng.random_range(-0.5..0.5)).collect();
        let y = vec![0, 1, 2, 0, 1, 2, 0, 1, 2];
        let full = SurrogateModel::new(vec![w1.clone(), w2.clone()], 1.0).unwrap();
        let scaled = SurrogateModel::new(vec![w1, w2], 0.25).unwrap();
        let a = compute_theta(&full, &g, &x, &y, &eps).unwrap();
        let b = compute_theta(&scaled, &g, &x, &y, &eps).unwrap();
        for j in 0..9 {
            if a.theta[j].is_finite() {
                assert!(
                    (a.theta[j] - b.theta[j]).abs() < 1e-9,
                    "node {j}: {} vs {}",
                    a.theta[j],
                    b.theta[j]
                );
            } else {
                assert!(b.theta[j].is_infinite());
            }
        }
    }

    #[test]
    fn equivalence_holds_on_two_class_instances() {
        // Labels taken from the clean argmax make the single-threshold
        // picture exact for two classes: the only competing gap closes
        // monotonically in the load (or never).
        for seed in 0..20u64 {
            let g = random_graph(100 + seed, 12, 0.25);
            let mut rng = rng_from_seed(200 + seed);
            let x = random_matrix(&mut rng, 12, 4);
            let w1 = random_matrix(&mut rng, 5, 4);
            let w2 = random_matrix(&mut rng, 2, 5);
            let model = SurrogateModel::new(vec![w1, w2], 1.0).unwrap();
            let y = predictions(&model.expected_forward(&g, &x).unwrap());
            let eps: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s: Vec<usize> = (0..12).filter(|_| rng.random_range(0.0..1.0) < 0.3).collect();
            let report = verify_equivalence(&model, &g, &x, &y, &eps, &s, 2).unwrap();
            assert!(
                report.violations.is_empty(),
                "seed {seed}: violations at {:?}",
                report.violations
            );
            assert!(report.max_linearity_error < 1e-10);
            assert!(report.ties.len() * 50 <= report.n_nodes);
        }
    }

    #[test]
    fn empty_seed_set_reproduces_clean_misclassification() {
        // Labels equal to the clean argmax: nothing is misclassified and
        // no threshold sits below zero, so both indicators are all-false.
        let g = random_graph(41, 10, 0.3);
        let mut rng = rng_from_seed(42);
        let x = random_matrix(&mut rng, 10, 3);
        let w = random_matrix(&mut rng, 2, 3);
        let model = SurrogateModel::new(vec![w], 1.0).unwrap();
        let y = predictions(&model.expected_forward(&g, &x).unwrap());
        let eps: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let report = verify_equivalence(&model, &g, &x, &y, &eps, &[], 1).unwrap();
        assert_eq!(report.flips_forward, 0);
        assert_eq!(report.flips_threshold, 0);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn clean_misclassified_node_gets_negative_threshold() {
        // One node, logits favoring class 1 while y = 0: the margin is
        // negative and eps feeds class 1, so theta < 0 and the empty set
        // already trips both indicators.
        let g = build_graph(&[("a".into(), "a".into())], None, None).unwrap();
        let x = ndarray::array![[1.0, 0.0]];
        let w = ndarray::array![[0.0, 0.0], [0.3, 0.1]];
        let model = SurrogateModel::new(vec![w], 1.0).unwrap();
        let report = compute_theta(&model, &g, &x, &[0], &[0.0, 1.0]).unwrap();
        assert!((report.theta[0] - (-3.0)).abs() < 1e-12);
        let eq = verify_equivalence(&model, &g, &x, &[0], &[0.0, 1.0], &[], 1).unwrap();
        assert_eq!(eq.flips_forward, 1);
        assert_eq!(eq.flips_threshold, 1);
        assert!(eq.violations.is_empty());
    }

    #[test]
    fn walk_length_must_match_depth() {
        let g = path_graph(3);
        let x = Array2::zeros((3, 2));
        let model = SurrogateModel::new(vec![Array2::zeros((2, 2))], 1.0).unwrap();
        assert!(verify_equivalence(&model, &g, &x, &[0, 0, 0], &[0.0, 0.0], &[], 2).is_err());
    }

    #[test]
    fn gradient_identity_against_finite_differences() {
        let g = random_graph(51, 7, 0.35);
        let mut rng = rng_from_seed(52);
        let x = random_matrix(&mut rng, 7, 3);
        let w1 = random_matrix(&mut rng, 4, 3);
        let w2 = random_matrix(&mut rng, 2, 4);
        let model = SurrogateModel::new(vec![w1, w2], 0.8).unwrap();
        let walk = transition_matrix(&g);
        let w_eff = model.effective_weight();
        let step = 1e-5;
        for (i, d) in [(0usize, 0usize), (3, 1), (6, 2)] {
            let col = walk.walk_column(i, 2);
            for j in [0usize, 2, 5] {
                for k in 0..2 {
                    let mut plus = x.clone();
                    plus[(i, d)] += step;
                    let mut minus = x.clone();
                    minus[(i, d)] -= step;
                    let hp = model.expected_forward(&g, &plus).unwrap();
                    let hm = model.expected_forward(&g, &minus).unwrap();
                    let fd = (hp[(j, k)] - hm[(j, k)]) / (2.0 * step);
                    let analytic = col[j] * w_eff[(k, d)];
                    assert!(
                        (fd - analytic).abs() < 1e-6,
                        "d H[{j},{k}] / d X[{i},{d}]: fd {fd} vs {analytic}"
                    );
                }
            }
        }
    }

    #[test]
    fn model_json_round_trips() {
        let mut rng = rng_from_seed(61);
        let w1 = random_matrix(&mut rng, 4, 3);
        let w2 = random_matrix(&mut rng, 2, 4);
        let model = SurrogateModel::new(vec![w1, w2], 0.9).unwrap();
        let text = serde_json::to_string(&model).unwrap();
        let back: SurrogateModel = serde_json::from_str(&text).unwrap();
        assert_eq!(model, back);
        // Mangled shape information must not deserialize.
        let broken = text.replace("\"rows\":4", "\"rows\":5");
        assert!(serde_json::from_str::<SurrogateModel>(&broken).is_err());
    }

    fn histogram_graph() -> Graph {
        crate::synth::generate_sbm(&crate::synth::SBMConfig {
            n_communities: 2,
            nodes_per_community: 15,
            p_in: 0.3,
            p_out: 0.05,
            feature_dim: 6,
            signal: 1.5,
            noise_sd: 0.5,
            seed: 11,
        })
        .unwrap()
    }

    fn histogram_config() -> crate::victim::TrainConfig {
        crate::victim::TrainConfig {
            hidden: 8,
            epochs: 60,
            ..crate::victim::TrainConfig::default()
        }
    }

    #[test]
    fn single_trial_matches_a_direct_threshold_computation() {
        let g = histogram_graph();
        let x = g.features().unwrap().clone();
        let y = g.labels().unwrap().to_vec();
        let eps = vec![10.0, -10.0, 0.0, 0.0, 0.0, 0.0];
        let hist = theta_histogram(&g, &x, &y, &eps, &histogram_config(), 1, 77).unwrap();

        let seed = crate::rng::derive_seed(77, crate::rng::streams::THETA_TRIAL, 0);
        let split = crate::victim::random_split(g.n(), 0.6, 0.2, seed).unwrap();
        let config = crate::victim::TrainConfig { seed, ..histogram_config() };
        let model = crate::victim::train(&g, &split, &config).unwrap();
        let report = compute_theta(&model.to_surrogate(), &g, &x, &y, &eps).unwrap();
        for i in 0..g.n() {
            assert_eq!(hist.samples[i], vec![report.theta[i]]);
        }
        assert_eq!(hist.n_failed, 0);
        // One sample is never enough to bin.
        assert!(hist.monotone.iter().all(|m| m.is_none()));
    }

    #[test]
    fn zero_perturbation_yields_only_infinite_samples() {
        let g = histogram_graph();
        let x = g.features().unwrap().clone();
        let y = g.labels().unwrap().to_vec();
        let hist =
            theta_histogram(&g, &x, &y, &[0.0; 6], &histogram_config(), 3, 5).unwrap();
        for row in &hist.samples {
            assert_eq!(row.len(), 3);
            assert!(row.iter().all(|&v| v == f64::INFINITY));
        }
        assert!(hist.monotone.iter().all(|m| m.is_none()));
        assert!(hist.monotone_fraction().is_none());
    }

    #[test]
    fn histogram_runs_are_deterministic_and_reportable() {
        let g = histogram_graph();
        let x = g.features().unwrap().clone();
        let y = g.labels().unwrap().to_vec();
        let eps = vec![10.0, -10.0, 0.0, 0.0, 0.0, 0.0];
        let a = theta_histogram(&g, &x, &y, &eps, &histogram_config(), 12, 3).unwrap();
        let b = theta_histogram(&g, &x, &y, &eps, &histogram_config(), 12, 3).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.samples_csv(&g), b.samples_csv(&g));
        assert_eq!(a.monotone.len(), g.n());
        // Twelve trained models on a signal-bearing graph leave enough
        // finite thresholds to assess at least one node.
        assert!(a.monotone_fraction().is_some());
        let diag = a.diagnostic_csv(&g);
        assert!(diag.starts_with("node_id,finite_samples,density_non_increasing\n"));
        assert_eq!(diag.lines().count(), g.n() + 1);
        assert!(a.samples_csv(&g).contains(",inf") || a.samples_csv(&g).contains(","));
    }

    #[test]
    fn density_diagnostic_classifies_hand_built_samples() {
        // Crowded near zero with a thinning tail: counts 4, 2, 1.
        let falling = [0.1, 0.2, 0.3, 0.4, 1.0, 1.1, 2.0];
        assert_eq!(positive_density_non_increasing(&falling), Some(true));
        // Mass piled away from zero: a later bin outgrows an earlier one.
        let rising = [0.1, 1.0, 1.1, 1.2, 1.3];
        assert_eq!(positive_density_non_increasing(&rising), Some(false));
        // Too few finite values, no positives, or zero spread: skipped.
        assert_eq!(positive_density_non_increasing(&[0.5, f64::INFINITY, 1.0]), None);
        assert_eq!(positive_density_non_increasing(&[-3.0, -2.0, -1.0, -0.5]), None);
        assert_eq!(positive_density_non_increasing(&[2.0, 2.0, 2.0, 2.0]), None);
    }
}
