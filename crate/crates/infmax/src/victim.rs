//! Trainable two-layer GCN victim with true ReLU.
//!
//! This is the model the attacks are judged against: logits
//! M ReLU(M X W1^T) W2^T, trained full-batch on cross-entropy with
//! explicit backpropagation. Everything is deterministic given the
//! config seed, and the returned model is the snapshot from the epoch
//! with the best validation accuracy (strictly better replaces, so the
//! earliest best wins).

use ndarray::{Array1, Array2};
use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{transition_matrix, Graph, RandomWalkMatrix};
use crate::rng::{derive_seed, rng_from_seed, streams};
use crate::strategies::AttackPlan;
use crate::surrogate::{predictions, SurrogateModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            hidden: 32,
            learning_rate: 0.01,
            epochs: 200,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

/// Disjoint train/validation/test masks over the nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
}

impl Split {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.train.len() != n || self.val.len() != n || self.test.len() != n {
            return Err(Error::invalid(format!("split masks must have length {n}")));
        }
        for i in 0..n {
            if (self.train[i] as u8) + (self.val[i] as u8) + (self.test[i] as u8) > 1 {
                return Err(Error::invalid(format!("node {i} sits in two split masks")));
            }
        }
        if !self.train.iter().any(|&b| b) {
            return Err(Error::invalid("training mask is empty"));
        }
        Ok(())
    }
}

/// Shuffle the nodes and cut train/val prefixes by the given fractions,
/// remainder to test.
pub fn random_split(n: usize, train_frac: f64, val_frac: f64, seed: u64) -> Result<Split> {
    if n == 0 {
        return Err(Error::invalid("cannot split zero nodes"));
    }
    if !(train_frac > 0.0 && val_frac >= 0.0 && train_frac + val_frac < 1.0) {
        return Err(Error::invalid(format!(
            "bad split fractions train={train_frac}, val={val_frac}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(derive_seed(seed, streams::SPLIT, 0));
    // Fisher-Yates, high to low, so adding nodes later keeps a prefix
    // stable only by accident; all we promise is determinism per seed.
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let n_train = ((n as f64) * train_frac).floor() as usize;
    let n_val = ((n as f64) * val_frac).floor() as usize;
    let mut split = Split {
        train: vec![false; n],
        val: vec![false; n],
        test: vec![false; n],
    };
    for (pos, &node) in order.iter().enumerate() {
        if pos < n_train {
            split.train[node] = true;
        } else if pos < n_train + n_val {
            split.val[node] = true;
        } else {
            split.test[node] = true;
        }
    }
    split.validate(n)?;
    Ok(split)
}

/// The trained victim: weights plus the config and split that produced
/// it, so a checkpoint is self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CheckpointWire", into = "CheckpointWire")]
pub struct VictimGCN {
    w1: Array2<f64>,
    w2: Array2<f64>,
    pub config: TrainConfig,
    pub split: Split,
}

#[derive(Serialize, Deserialize)]
struct MatrixWire {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl From<&Array2<f64>> for MatrixWire {
    fn from(a: &Array2<f64>) -> MatrixWire {
        MatrixWire {
            rows: a.nrows(),
            cols: a.ncols(),
            data: a.iter().copied().collect(),
        }
    }
}

impl MatrixWire {
    fn into_array(self) -> Result<Array2<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::invalid(format!(
                "matrix data length {} does not match {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Array2::from_shape_vec((self.rows, self.cols), self.data)
            .map_err(|e| Error::invalid(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointWire {
    w1: MatrixWire,
    w2: MatrixWire,
    config: TrainConfig,
    split: Split,
}

impl From<VictimGCN> for CheckpointWire {
    fn from(m: VictimGCN) -> CheckpointWire {
        CheckpointWire {
            w1: (&m.w1).into(),
            w2: (&m.w2).into(),
            config: m.config,
            split: m.split,
        }
    }
}

impl TryFrom<CheckpointWire> for VictimGCN {
    type Error = Error;

    fn try_from(w: CheckpointWire) -> Result<VictimGCN> {
        VictimGCN::from_weights(w.w1.into_array()?, w.w2.into_array()?, w.config, w.split)
    }
}

/// Outcome of one attack evaluation on a node mask.
#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub clean_accuracy: f64,
    pub attacked_accuracy: f64,
    /// Nodes in the mask that were correct before and wrong after.
    pub flipped: usize,
    pub n_eval: usize,
    pub plan: AttackPlan,
    /// Perturbation strength max |eps_d|.
    pub lambda: f64,
}

fn glorot_uniform(rng: &mut impl RngExt, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-limit..limit))
}

fn relu(a: &Array2<f64>) -> Array2<f64> {
    a.map(|&v| v.max(0.0))
}

/// Row-wise softmax with the usual max-shift for stability.
fn softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.map_inplace(|v| *v = (*v - max).exp());
        let sum = row.sum();
        row.map_inplace(|v| *v /= sum);
    }
    out
}

impl VictimGCN {
    pub fn from_weights(
        w1: Array2<f64>,
        w2: Array2<f64>,
        config: TrainConfig,
        split: Split,
    ) -> Result<VictimGCN> {
        if w2.ncols() != w1.nrows() {
            return Err(Error::invalid(format!(
                "hidden layer mismatch: w1 produces {} units, w2 expects {}",
                w1.nrows(),
                w2.ncols()
            )));
        }
        Ok(VictimGCN {
            w1,
            w2,
            config,
            split,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.w2.nrows()
    }

    pub fn weights(&self) -> (&Array2<f64>, &Array2<f64>) {
        (&self.w1, &self.w2)
    }

    /// Logits M ReLU(M X W1^T) W2^T for explicit features.
    pub fn forward(&self, g: &Graph, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.nrows() != g.n() || x.ncols() != self.in_dim() {
            return Err(Error::invalid(format!(
                "features are {}x{}, model needs {}x{}",
                x.nrows(),
                x.ncols(),
                g.n(),
                self.in_dim()
            )));
        }
        let walk = transition_matrix(g);
        Ok(self.forward_with(&walk, x).0)
    }

    /// Forward pass returning (logits, hidden pre-activation, aggregated
    /// input); the extra pieces feed backprop.
    fn forward_with(&self, walk: &RandomWalkMatrix, x: &Array2<f64>) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let a1 = walk.apply_dense(x);
        let h1_pre = a1.dot(&self.w1.t());
        let a2 = walk.apply_dense(&relu(&h1_pre));
        let logits = a2.dot(&self.w2.t());
        (logits, h1_pre, a1)
    }

    /// Mean cross-entropy over the mask.
    pub fn loss(&self, g: &Graph, x: &Array2<f64>, y: &[usize], mask: &[bool]) -> Result<f64> {
        let logits = self.forward(g, x)?;
        mean_cross_entropy(&logits, y, mask)
    }

    pub fn accuracy(&self, g: &Graph, x: &Array2<f64>, y: &[usize], mask: &[bool]) -> Result<f64> {
        let logits = self.forward(g, x)?;
        accuracy_of(&logits, y, mask)
    }

    /// The linearized view of this model: same weights, rho = 1.
    pub fn to_surrogate(&self) -> SurrogateModel {
        SurrogateModel::new(vec![self.w1.clone(), self.w2.clone()], 1.0)
            .expect("victim weights always chain")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<VictimGCN> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad checkpoint: {e}")))
    }
}

fn mean_cross_entropy(logits: &Array2<f64>, y: &[usize], mask: &[bool]) -> Result<f64> {
    let n_masked = mask.iter().filter(|&&b| b).count();
    if n_masked == 0 {
        return Err(Error::invalid("cross-entropy over an empty mask"));
    }
    let mut total = 0.0;
    for i in 0..logits.nrows() {
        if !mask[i] {
            continue;
        }
        let row = logits.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum: f64 = row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln() + max;
        total += log_sum - row[y[i]];
    }
    Ok(total / n_masked as f64)
}

fn accuracy_of(logits: &Array2<f64>, y: &[usize], mask: &[bool]) -> Result<f64> {
    let n_masked = mask.iter().filter(|&&b| b).count();
    if n_masked == 0 {
        return Err(Error::invalid("accuracy over an empty mask"));
    }
    let pred = predictions(logits);
    let correct = (0..logits.nrows())
        .filter(|&i| mask[i] && pred[i] == y[i])
        .count();
    Ok(correct as f64 / n_masked as f64)
}

/// Gradients of the masked mean cross-entropy with respect to both
/// weight matrices and the features.
struct Gradients {
    w1: Array2<f64>,
    w2: Array2<f64>,
    x: Array2<f64>,
}

fn backprop(
    model: &VictimGCN,
    walk: &RandomWalkMatrix,
    x: &Array2<f64>,
    y: &[usize],
    mask: &[bool],
) -> Result<(f64, Gradients)> {
    let (logits, h1_pre, a1) = model.forward_with(walk, x);
    let loss = mean_cross_entropy(&logits, y, mask)?;
    let n_masked = mask.iter().filter(|&&b| b).count() as f64;

    // d loss / d logits: (softmax - onehot) / n on masked rows.
    let mut d_logits = softmax(&logits);
    for i in 0..d_logits.nrows() {
        if mask[i] {
            d_logits[(i, y[i])] -= 1.0;
            let mut row = d_logits.row_mut(i);
            row.map_inplace(|v| *v /= n_masked);
        } else {
            d_logits.row_mut(i).fill(0.0);
        }
    }

    // logits = A2 W2^T with A2 = M relu(h1_pre).
    let h1 = relu(&h1_pre);
    let a2 = walk.apply_dense(&h1);
    let d_w2 = d_logits.t().dot(&a2);
    let d_a2 = d_logits.dot(&model.w2);
    let d_h1 = walk.apply_transpose_dense(&d_a2);
    let d_h1_pre = ndarray::Zip::from(&d_h1)
        .and(&h1_pre)
        .map_collect(|&g, &pre| if pre > 0.0 { g } else { 0.0 });

    // h1_pre = A1 W1^T with A1 = M X.
    let d_w1 = d_h1_pre.t().dot(&a1);
    let d_a1 = d_h1_pre.dot(&model.w1);
    let d_x = walk.apply_transpose_dense(&d_a1);

    Ok((
        loss,
        Gradients {
            w1: d_w1,
            w2: d_w2,
            x: d_x,
        },
    ))
}

/// Full-batch gradient descent on the training mask; the returned model
/// is the best-validation-accuracy snapshot (ties keep the earlier
/// epoch; with an empty validation mask, the final weights).
pub fn train(g: &Graph, split: &Split, config: &TrainConfig) -> Result<VictimGCN> {
    let (x, y) = g.labeled_features()?;
    split.validate(g.n())?;
    if config.hidden == 0 || config.learning_rate <= 0.0 {
        return Err(Error::invalid("training needs hidden >= 1 and a positive rate"));
    }
    let k = g.n_classes().ok_or_else(|| Error::invalid("graph has no labels"))?;
    if k < 2 {
        return Err(Error::invalid("training needs at least two classes"));
    }
    let d = g.feature_dim().unwrap();

    let mut rng = rng_from_seed(derive_seed(config.seed, streams::VICTIM_INIT, 0));
    let mut model = VictimGCN {
        w1: glorot_uniform(&mut rng, config.hidden, d),
        w2: glorot_uniform(&mut rng, k, config.hidden),
        config: *config,
        split: split.clone(),
    };

    let walk = transition_matrix(g);
    let has_val = split.val.iter().any(|&b| b);
    let x = x.to_owned();
    let mut best: Option<(f64, Array2<f64>, Array2<f64>)> = None;
    for epoch in 0..=config.epochs {
        if has_val {
            let (logits, _, _) = model.forward_with(&walk, &x);
            let val_acc = accuracy_of(&logits, y, &split.val)?;
            if best.as_ref().map_or(true, |(b, _, _)| val_acc > *b) {
                best = Some((val_acc, model.w1.clone(), model.w2.clone()));
            }
        }
        if epoch == config.epochs {
            break;
        }
        let (loss, grads) = backprop(&model, &walk, &x, y, &split.train)?;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!(
                "training loss became {loss} at epoch {epoch}; lower the learning rate"
            )));
        }
        let lr = config.learning_rate;
        let wd = config.weight_decay;
        model.w1.zip_mut_with(&grads.w1, |w, &g| *w -= lr * (g + wd * *w));
        model.w2.zip_mut_with(&grads.w2, |w, &g| *w -= lr * (g + wd * *w));
    }
    if let Some((_, w1, w2)) = best {
        model.w1 = w1;
        model.w2 = w2;
    }
    Ok(model)
}

/// Average feature-space gradient: one signed score per feature
/// dimension, equal to the derivative of the all-nodes mean loss with
/// respect to a global shift of that feature.
pub fn gradient_scores(model: &VictimGCN, g: &Graph) -> Result<Vec<f64>> {
    let (x, y) = g.labeled_features()?;
    let walk = transition_matrix(g);
    let mask = vec![true; g.n()];
    let x = x.to_owned();
    let (_, grads) = backprop(model, &walk, &x, y, &mask)?;
    let summed: Array1<f64> = grads.x.sum_axis(ndarray::Axis(0));
    Ok(summed.to_vec())
}

/// Add eps to the planned rows and measure accuracy before and after.
pub fn evaluate_attack(
    model: &VictimGCN,
    g: &Graph,
    plan: &AttackPlan,
    epsilon: &[f64],
    mask: &[bool],
) -> Result<AttackOutcome> {
    let (x, y) = g.labeled_features()?;
    if epsilon.len() != model.in_dim() {
        return Err(Error::invalid(format!(
            "perturbation has {} entries, features have {}",
            epsilon.len(),
            model.in_dim()
        )));
    }
    if mask.len() != g.n() {
        return Err(Error::invalid("evaluation mask length mismatch"));
    }
    let x = x.to_owned();
    let clean_logits = model.forward(g, &x)?;
    let mut attacked = x.clone();
    for &i in &plan.selected {
        if i >= g.n() {
            return Err(Error::invalid(format!("plan node {i} outside the graph")));
        }
        let mut row = attacked.row_mut(i);
        for (v, e) in row.iter_mut().zip(epsilon) {
            *v += e;
        }
    }
    let attacked_logits = model.forward(g, &attacked)?;

    let clean_pred = predictions(&clean_logits);
    let attacked_pred = predictions(&attacked_logits);
    let n_eval = mask.iter().filter(|&&b| b).count();
    if n_eval == 0 {
        return Err(Error::invalid("attack evaluation over an empty mask"));
    }
    let mut clean_correct = 0;
    let mut attacked_correct = 0;
    let mut flipped = 0;
    for i in 0..g.n() {
        if !mask[i] {
            continue;
        }
        let was = clean_pred[i] == y[i];
        let is = attacked_pred[i] == y[i];
        clean_correct += was as usize;
        attacked_correct += is as usize;
        flipped += (was && !is) as usize;
    }
    Ok(AttackOutcome {
        clean_accuracy: clean_correct as f64 / n_eval as f64,
        attacked_accuracy: attacked_correct as f64 / n_eval as f64,
        flipped,
        n_eval,
        plan: plan.clone(),
        lambda: epsilon.iter().fold(0.0f64, |m, &e| m.max(e.abs())),
    })
}
