//! Linear threshold model on the influence bipartite view.
//!
//! A seed set S puts load sum_{i in S} B_ji on each target j. A target
//! activates when its load clears a threshold theta_j. With thresholds
//! drawn from a distribution with CDF F_j, the expected number of
//! activations is h(S) = sum_j F_j(load_j), which has closed forms for the
//! uniform and normal families and is monotone and submodular whenever
//! F_j is concave on [0, inf).
//!
//! Activation conventions: `exact_objective` counts load > theta (strict),
//! matching the indicator-sum objective it optimizes; `simulate_spread`
//! counts load >= theta, matching the cascade definition. The two agree
//! almost surely for continuously drawn thresholds.

use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::graph::{check_distinct, InfluenceMatrix};
use crate::rng::{derive_seed, rng_from_seed, streams};

/// Threshold law for the targets: a shared continuous family or one
/// explicit value per target (infinities allowed, meaning "never").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ThresholdSpec {
    /// Uniform on (-b, a) with a > 0, b >= 0.
    Uniform { a: f64, b: f64 },
    /// Centered normal with standard deviation sigma > 0.
    Normal { sigma: f64 },
    /// One threshold per target; `inf` serializes as the string "inf".
    Explicit {
        #[serde(with = "inf_values")]
        values: Vec<f64>,
    },
}

impl ThresholdSpec {
    /// Uniform(-a, a), the symmetric default shape.
    pub fn uniform(a: f64) -> ThresholdSpec {
        ThresholdSpec::Uniform { a, b: a }
    }

    pub fn normal(sigma: f64) -> ThresholdSpec {
        ThresholdSpec::Normal { sigma }
    }

    pub fn validate(&self, n_targets: Option<usize>) -> Result<()> {
        match self {
            ThresholdSpec::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a > 0.0 && *b >= 0.0) {
                    return Err(Error::invalid(format!(
                        "uniform thresholds need a > 0 and b >= 0, got a = {a}, b = {b}"
                    )));
                }
            }
            ThresholdSpec::Normal { sigma } => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::invalid(format!(
                        "normal thresholds need sigma > 0, got {sigma}"
                    )));
                }
            }
            ThresholdSpec::Explicit { values } => {
                if values.iter().any(|v| v.is_nan()) {
                    return Err(Error::invalid("explicit thresholds contain NaN"));
                }
                if let Some(n) = n_targets {
                    if values.len() != n {
                        return Err(Error::invalid(format!(
                            "{} explicit thresholds for {n} targets",
                            values.len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

mod inf_values {
    use serde::de::Error as DeError;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for &x in v {
            if x.is_finite() {
                seq.serialize_element(&x)?;
            } else if x > 0.0 {
                seq.serialize_element("inf")?;
            } else {
                seq.serialize_element("-inf")?;
            }
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Cell {
            Num(f64),
            Text(String),
        }
        let raw: Vec<Cell> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|c| match c {
                Cell::Num(x) => Ok(x),
                Cell::Text(t) => match t.as_str() {
                    "inf" | "+inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    other => Err(D::Error::custom(format!(
                        "threshold must be a number, \"inf\" or \"-inf\", got {other:?}"
                    ))),
                },
            })
            .collect()
    }
}

/// Anything that exposes per-seed influence columns over a target set.
/// Implemented by `InfluenceMatrix` (columns of M^L) and by explicit
/// `BipartiteInstance` weights, so the objectives, the greedy, and the
/// brute force run identically over both.
pub trait InfluenceWeights {
    fn n_targets(&self) -> usize;
    /// All admissible seed indices, sorted ascending.
    fn seeds(&self) -> Vec<usize>;
    /// Add seed's column into `load` (len `n_targets()`).
    fn accumulate(&self, seed: usize, load: &mut [f64]) -> Result<()>;

    /// Per-target load of a distinct seed set, accumulated in ascending
    /// seed order for reproducible floating-point results.
    fn load_of(&self, s: &[usize]) -> Result<Vec<f64>> {
        check_distinct(s)?;
        let mut sorted = s.to_vec();
        sorted.sort_unstable();
        let mut load = vec![0.0; self.n_targets()];
        for &i in &sorted {
            self.accumulate(i, &mut load)?;
        }
        Ok(load)
    }
}

impl InfluenceWeights for InfluenceMatrix<'_> {
    fn n_targets(&self) -> usize {
        InfluenceMatrix::n_targets(self)
    }

    fn seeds(&self) -> Vec<usize> {
        self.candidates().to_vec()
    }

    fn accumulate(&self, seed: usize, load: &mut [f64]) -> Result<()> {
        let col = self.column(seed)?;
        for (l, &b) in load.iter_mut().zip(col.iter()) {
            *l += b;
        }
        Ok(())
    }
}

/// Explicit weighted bipartite influence instance: n_seeds on one side,
/// n_targets with thresholds on the other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceWire", into = "InstanceWire")]
pub struct BipartiteInstance {
    n_seeds: usize,
    n_targets: usize,
    /// Per seed: (target, weight) pairs sorted by target.
    columns: Vec<Vec<(usize, f64)>>,
    pub thresholds: ThresholdSpec,
}

#[derive(Serialize, Deserialize)]
struct InstanceWire {
    n_seeds: usize,
    n_targets: usize,
    weights: Vec<(usize, usize, f64)>,
    thresholds: ThresholdSpec,
}

impl From<BipartiteInstance> for InstanceWire {
    fn from(inst: BipartiteInstance) -> InstanceWire {
        let mut weights = Vec::new();
        for (i, col) in inst.columns.iter().enumerate() {
            for &(j, w) in col {
                weights.push((i, j, w));
            }
        }
        InstanceWire {
            n_seeds: inst.n_seeds,
            n_targets: inst.n_targets,
            weights,
            thresholds: inst.thresholds,
        }
    }
}

impl TryFrom<InstanceWire> for BipartiteInstance {
    type Error = Error;

    fn try_from(w: InstanceWire) -> Result<BipartiteInstance> {
        BipartiteInstance::new(w.n_seeds, w.n_targets, &w.weights, w.thresholds)
    }
}

impl BipartiteInstance {
    /// Build from (seed, target, weight) triples. Weights must be finite
    /// and non-negative; duplicate (seed, target) pairs are rejected.
    pub fn new(
        n_seeds: usize,
        n_targets: usize,
        weights: &[(usize, usize, f64)],
        thresholds: ThresholdSpec,
    ) -> Result<BipartiteInstance> {
        thresholds.validate(Some(n_targets))?;
        let mut columns = vec![Vec::new(); n_seeds];
        for &(i, j, w) in weights {
            if i >= n_seeds || j >= n_targets {
                return Err(Error::invalid(format!(
                    "weight ({i}, {j}) outside {n_seeds} seeds x {n_targets} targets"
                )));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::invalid(format!(
                    "weight for seed {i}, target {j} must be finite and >= 0, got {w}"
                )));
            }
            columns[i].push((j, w));
        }
        for (i, col) in columns.iter_mut().enumerate() {
            col.sort_by_key(|&(j, _)| j);
            if col.windows(2).any(|p| p[0].0 == p[1].0) {
                return Err(Error::invalid(format!("duplicate weight entries for seed {i}")));
            }
        }
        Ok(BipartiteInstance {
            n_seeds,
            n_targets,
            columns,
            thresholds,
        })
    }

    pub fn n_seeds(&self) -> usize {
        self.n_seeds
    }

    pub fn column_entries(&self, seed: usize) -> &[(usize, f64)] {
        &self.columns[seed]
    }
}

impl InfluenceWeights for BipartiteInstance {
    fn n_targets(&self) -> usize {
        self.n_targets
    }

    fn seeds(&self) -> Vec<usize> {
        (0..self.n_seeds).collect()
    }

    fn accumulate(&self, seed: usize, load: &mut [f64]) -> Result<()> {
        let col = self
            .columns
            .get(seed)
            .ok_or_else(|| Error::invalid(format!("seed {seed} out of range")))?;
        for &(j, w) in col {
            load[j] += w;
        }
        Ok(())
    }
}

/// h(S) for a load vector under the given threshold law.
///
/// The uniform form keeps the constant n*b/(a+b) outside the per-target
/// sum; with very large a (the RWCS limit) the naive sum of (load+b)
/// terms would drown the loads in rounding error and scramble argmax
/// comparisons downstream.
fn value_of_load(spec: &ThresholdSpec, load: &[f64]) -> f64 {
    match spec {
        ThresholdSpec::Uniform { a, b } => {
            let core: f64 = load.iter().map(|&l| l.min(*a)).sum();
            core / (a + b) + load.len() as f64 * (b / (a + b))
        }
        ThresholdSpec::Normal { sigma } => {
            let core: f64 = load
                .iter()
                .map(|&l| erf(l / (sigma * std::f64::consts::SQRT_2)))
                .sum();
            0.5 * load.len() as f64 + 0.5 * core
        }
        ThresholdSpec::Explicit { values } => {
            load.iter().zip(values).filter(|&(l, t)| l > t).count() as f64
        }
    }
}

/// Objective value of seed set `s` under `spec`; the continuous families
/// give the expected activation count, `Explicit` the strict-inequality
/// indicator count.
pub fn objective_value<W: InfluenceWeights + ?Sized>(
    w: &W,
    spec: &ThresholdSpec,
    s: &[usize],
) -> Result<f64> {
    spec.validate(Some(w.n_targets()))?;
    Ok(value_of_load(spec, &w.load_of(s)?))
}

/// E[activations] under Uniform(-b, a) thresholds:
/// (1/(a+b)) * sum_j (min(load_j, a) + b).
pub fn expected_objective_uniform<W: InfluenceWeights + ?Sized>(
    w: &W,
    a: f64,
    b: f64,
    s: &[usize],
) -> Result<f64> {
    objective_value(w, &ThresholdSpec::Uniform { a, b }, s)
}

/// E[activations] under Normal(0, sigma^2) thresholds:
/// sum_j (1 + erf(load_j / (sigma * sqrt(2)))) / 2.
pub fn expected_objective_normal<W: InfluenceWeights + ?Sized>(
    w: &W,
    sigma: f64,
    s: &[usize],
) -> Result<f64> {
    objective_value(w, &ThresholdSpec::Normal { sigma }, s)
}

/// Count of targets with load strictly above their explicit threshold.
pub fn exact_objective<W: InfluenceWeights + ?Sized>(
    w: &W,
    theta: &[f64],
    s: &[usize],
) -> Result<usize> {
    if theta.len() != w.n_targets() {
        return Err(Error::invalid(format!(
            "{} thresholds for {} targets",
            theta.len(),
            w.n_targets()
        )));
    }
    if theta.iter().any(|t| t.is_nan()) {
        return Err(Error::invalid("thresholds contain NaN"));
    }
    let load = w.load_of(s)?;
    Ok(load.iter().zip(theta).filter(|&(l, t)| l > t).count())
}

/// One cascade draw: sample thresholds from the instance's law (or use
/// the explicit values) and count targets with load >= theta.
pub fn simulate_spread(inst: &BipartiteInstance, s: &[usize], rng_seed: u64) -> Result<usize> {
    let load = inst.load_of(s)?;
    let mut rng = rng_from_seed(rng_seed);
    let n = inst.n_targets;
    let count = match &inst.thresholds {
        ThresholdSpec::Uniform { a, b } => {
            let mut c = 0;
            for &l in &load {
                let theta = rng.random_range(-*b..*a);
                if l >= theta {
                    c += 1;
                }
            }
            c
        }
        ThresholdSpec::Normal { sigma } => {
            let mut c = 0;
            for &l in &load {
                let z: f64 = StandardNormal.sample(&mut rng);
                if l >= sigma * z {
                    c += 1;
                }
            }
            c
        }
        ThresholdSpec::Explicit { values } => {
            load.iter().zip(values).filter(|&(l, t)| l >= t).count()
        }
    };
    debug_assert!(count <= n);
    Ok(count)
}

/// Sample mean and standard error of `simulate_spread` over independent
/// trials; trial t uses the seed derived from (master 'seed', t), so the
/// estimate does not depend on any evaluation order.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub trials: usize,
}

pub fn simulate_mean(
    inst: &BipartiteInstance,
    s: &[usize],
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::invalid("monte carlo needs at least one trial"));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for t in 0..trials {
        let count = simulate_spread(inst, s, derive_seed(seed, streams::SIM_TRIAL, t as u64))?;
        let x = count as f64;
        sum += x;
        sum_sq += x * x;
    }
    let n = trials as f64;
    let mean = sum / n;
    let var = ((sum_sq - sum * sum / n) / (n - 1.0).max(1.0)).max(0.0);
    Ok(McEstimate {
        mean,
        std_err: (var / n).sqrt(),
        trials,
    })
}

/// Plain greedy maximization of the objective: r rounds, each adding the
/// candidate with the highest resulting value, ties broken by the lowest
/// index. Zero-gain rounds still pick (the trace stays flat), and the
/// selection stops early only when candidates run out. Returns the picks
/// in order and the objective value after each one.
pub fn greedy_maximize<W: InfluenceWeights + ?Sized>(
    w: &W,
    spec: &ThresholdSpec,
    candidates: &[usize],
    r: usize,
) -> Result<(Vec<usize>, Vec<f64>)> {
    spec.validate(Some(w.n_targets()))?;
    check_distinct(candidates)?;
    let mut remaining = candidates.to_vec();
    remaining.sort_unstable();
    let mut load = vec![0.0; w.n_targets()];
    let mut selected = Vec::new();
    let mut trace = Vec::new();
    let mut buf = vec![0.0; w.n_targets()];
    for _ in 0..r {
        if remaining.is_empty() {
            break;
        }
        let mut best: Option<(usize, usize, f64)> = None; // (pos, node, value)
        for (pos, &c) in remaining.iter().enumerate() {
            buf.copy_from_slice(&load);
            w.accumulate(c, &mut buf)?;
            let v = value_of_load(spec, &buf);
            if best.map_or(true, |(_, _, bv)| v > bv) {
                best = Some((pos, c, v));
            }
        }
        let (pos, node, value) = best.unwrap();
        remaining.remove(pos);
        w.accumulate(node, &mut load)?;
        selected.push(node);
        trace.push(value);
    }
    Ok((selected, trace))
}

const SUBSET_BUDGET: u128 = 1_000_000;

/// Number of subsets of size <= r from n candidates, saturating.
fn subset_count(n: usize, r: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for s in 0..=r.min(n) {
        if s > 0 {
            binom = match binom
                .checked_mul((n - s + 1) as u128)
                .map(|b| b / s as u128)
            {
                Some(b) => b,
                None => return u128::MAX,
            };
        }
        total = total.saturating_add(binom);
    }
    total
}

/// Exhaustive optimum over subsets of the candidates with |S| <= r.
/// Ties in value resolve to the lexicographically smallest index set
/// (so the empty set survives zero-gain alternatives). Refuses to
/// enumerate more than 10^6 subsets.
pub fn brute_force_optimum<W: InfluenceWeights + ?Sized>(
    w: &W,
    spec: &ThresholdSpec,
    candidates: &[usize],
    r: usize,
) -> Result<(Vec<usize>, f64)> {
    spec.validate(Some(w.n_targets()))?;
    check_distinct(candidates)?;
    let count = subset_count(candidates.len(), r);
    if count > SUBSET_BUDGET {
        return Err(Error::SubsetBudget {
            count,
            limit: SUBSET_BUDGET,
        });
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();

    let mut best_set: Vec<usize> = Vec::new();
    let mut best_value = value_of_load(spec, &vec![0.0; w.n_targets()]);
    let mut current: Vec<usize> = Vec::new();
    let mut load = vec![0.0; w.n_targets()];

    // Depth-first over index positions; every prefix is itself a subset.
    fn descend<W: InfluenceWeights + ?Sized>(
        w: &W,
        spec: &ThresholdSpec,
        sorted: &[usize],
        from: usize,
        r: usize,
        current: &mut Vec<usize>,
        load: &mut Vec<f64>,
        best_set: &mut Vec<usize>,
        best_value: &mut f64,
    ) -> Result<()> {
        if current.len() == r {
            return Ok(());
        }
        for pos in from..sorted.len() {
            let node = sorted[pos];
            current.push(node);
            // Evaluate from scratch in ascending order so equal sets always
            // produce bit-identical values regardless of search path.
            load.iter_mut().for_each(|l| *l = 0.0);
            for &i in current.iter() {
                w.accumulate(i, load)?;
            }
            let v = value_of_load(spec, load);
            if v > *best_value || (v == *best_value && current.as_slice() < best_set.as_slice()) {
                *best_value = v;
                *best_set = current.clone();
            }
            descend(w, spec, sorted, pos + 1, r, current, load, best_set, best_value)?;
            current.pop();
        }
        Ok(())
    }

    descend(
        w,
        spec,
        &sorted,
        0,
        r,
        &mut current,
        &mut load,
        &mut best_set,
        &mut best_value,
    )?;
    Ok((best_set, best_value))
}

/// Encode a Set Cover instance (universe 0..universe, the given subsets)
/// as a bipartite influence instance: one seed per subset, one target per
/// element, weight `alpha` where the subset contains the element, and
/// every threshold at alpha/2. Selecting r subsets then activates exactly
/// the covered elements.
pub fn setcover_instance(
    universe: usize,
    subsets: &[Vec<usize>],
    alpha: f64,
) -> Result<BipartiteInstance> {
    if universe == 0 {
        return Err(Error::invalid("set cover with an empty universe"));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    let mut triples = Vec::new();
    for (i, subset) in subsets.iter().enumerate() {
        let mut elems: Vec<usize> = subset.clone();
        elems.sort_unstable();
        elems.dedup();
        for e in elems {
            if e >= universe {
                return Err(Error::invalid(format!(
                    "subset {i} contains {e}, outside universe of size {universe}"
                )));
            }
            triples.push((i, e, alpha));
        }
    }
    BipartiteInstance::new(
        subsets.len(),
        universe,
        &triples,
        ThresholdSpec::Explicit {
            values: vec![alpha / 2.0; universe],
        },
    )
}

/// Decide "does some choice of r subsets cover the universe" by checking
/// whether the exhaustive optimum activates every target. Counting the r
/// selected seeds as active themselves, this is the same as asking for at
/// least universe + r activations on the whole bipartite graph.
pub fn setcover_decision(inst: &BipartiteInstance, r: usize) -> Result<bool> {
    let seeds = inst.seeds();
    let spec = inst.thresholds.clone();
    let (_, best) = brute_force_optimum(inst, &spec, &seeds, r)?;
    Ok(best as usize == inst.n_targets())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_instance() -> BipartiteInstance {
        BipartiteInstance::new(
            3,
            4,
            &[
                (0, 0, 0.6),
                (0, 1, 0.3),
                (1, 1, 0.5),
                (1, 2, 0.4),
                (2, 3, 0.9),
            ],
            ThresholdSpec::uniform(1.0),
        )
        .unwrap()
    }

    fn random_instance(seed: u64, n_seeds: usize, n_targets: usize) -> BipartiteInstance {
        let mut rng = rng_from_seed(seed);
        let mut triples = Vec::new();
        for i in 0..n_seeds {
            for j in 0..n_targets {
                if rng.random_range(0.0..1.0) < 0.5 {
                    triples.push((i, j, rng.random_range(0.0..0.4)));
                }
            }
        }
        BipartiteInstance::new(n_seeds, n_targets, &triples, ThresholdSpec::uniform(0.5)).unwrap()
    }

    /// Gauss CDF by adaptive Simpson quadrature of the density, oracle for
    /// the erf-based closed form.
    fn normal_cdf_quadrature(x: f64, sigma: f64) -> f64 {
        fn density(t: f64, sigma: f64) -> f64 {
            (-t * t / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        }
        fn simpson(a: f64, b: f64, sigma: f64) -> f64 {
            let m = 0.5 * (a + b);
            (b - a) / 6.0 * (density(a, sigma) + 4.0 * density(m, sigma) + density(b, sigma))
        }
        fn adaptive(a: f64, b: f64, sigma: f64, whole: f64, eps: f64) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(a, m, sigma);
            let right = simpson(m, b, sigma);
            if (left + right - whole).abs() < 15.0 * eps {
                left + right + (left + right - whole) / 15.0
            } else {
                adaptive(a, m, sigma, left, eps / 2.0) + adaptive(m, b, sigma, right, eps / 2.0)
            }
        }
        if x < 0.0 {
            return 1.0 - normal_cdf_quadrature(-x, sigma);
        }
        let whole = simpson(0.0, x, sigma);
        0.5 + adaptive(0.0, x, sigma, whole, 1e-14)
    }

    #[test]
    fn uniform_closed_form_matches_piecewise_cdf() {
        let inst = demo_instance();
        let (a, b) = (1.0, 1.0);
        for s in [vec![], vec![0], vec![0, 1], vec![0, 1, 2]] {
            let h = expected_objective_uniform(&inst, a, b, &s).unwrap();
            let load = inst.load_of(&s).unwrap();
            let direct: f64 = load
                .iter()
                .map(|&l| {
                    // Piecewise uniform CDF evaluated the textbook way.
                    if l <= -b {
                        0.0
                    } else if l >= a {
                        1.0
                    } else {
                        (l + b) / (a + b)
                    }
                })
                .sum();
            assert!((h - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn normal_closed_form_matches_quadrature() {
        let inst = demo_instance();
        for s in [vec![0], vec![0, 1], vec![0, 1, 2]] {
            for sigma in [0.3, 1.0] {
                let h = expected_objective_normal(&inst, sigma, &s).unwrap();
                let load = inst.load_of(&s).unwrap();
                let direct: f64 = load.iter().map(|&l| normal_cdf_quadrature(l, sigma)).sum();
                assert!(
                    (h - direct).abs() < 1e-9,
                    "sigma {sigma}: {h} vs quadrature {direct}"
                );
            }
        }
    }

    #[test]
    fn empty_set_has_baseline_value() {
        let inst = demo_instance();
        // With no load, every target sits at F(0): b/(a+b) and 1/2.
        let h = expected_objective_uniform(&inst, 1.0, 1.0, &[]).unwrap();
        assert!((h - 2.0).abs() < 1e-12);
        let h = expected_objective_normal(&inst, 0.5, &[]).unwrap();
        assert!((h - 2.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_in_the_seed_set() {
        for seed in 0..40u64 {
            let inst = random_instance(seed, 8, 10);
            let mut rng = rng_from_seed(1000 + seed);
            for _ in 0..25 {
                let mut s: Vec<usize> = (0..8).filter(|_| rng.random_range(0.0..1.0) < 0.4).collect();
                let extra = rng.random_range(0..8);
                if s.contains(&extra) {
                    continue;
                }
                let small_u = expected_objective_uniform(&inst, 0.5, 0.5, &s).unwrap();
                let small_n = expected_objective_normal(&inst, 0.5, &s).unwrap();
                s.push(extra);
                let big_u = expected_objective_uniform(&inst, 0.5, 0.5, &s).unwrap();
                let big_n = expected_objective_normal(&inst, 0.5, &s).unwrap();
                assert!(big_u + 1e-12 >= small_u);
                assert!(big_n + 1e-12 >= small_n);
            }
        }
    }

    #[test]
    fn diminishing_returns_on_nested_sets() {
        // f(S + v) - f(S) >= f(T + v) - f(T) for S subset of T.
        for seed in 0..40u64 {
            let inst = random_instance(seed, 8, 10);
            let mut rng = rng_from_seed(2000 + seed);
            for _ in 0..25 {
                let s: Vec<usize> = (0..8).filter(|_| rng.random_range(0.0..1.0) < 0.3).collect();
                let mut t = s.clone();
                for c in 0..8 {
                    if !t.contains(&c) && rng.random_range(0.0..1.0) < 0.3 {
                        t.push(c);
                    }
                }
                let v = rng.random_range(0..8);
                if t.contains(&v) {
                    continue;
                }
                for spec in [ThresholdSpec::uniform(0.5), ThresholdSpec::normal(0.5)] {
                    let fs = objective_value(&inst, &spec, &s).unwrap();
                    let ft = objective_value(&inst, &spec, &t).unwrap();
                    let mut sv = s.clone();
                    sv.push(v);
                    let mut tv = t.clone();
                    tv.push(v);
                    let fsv = objective_value(&inst, &spec, &sv).unwrap();
                    let ftv = objective_value(&inst, &spec, &tv).unwrap();
                    assert!(
                        (fsv - fs) - (ftv - ft) >= -1e-12,
                        "seed {seed}: gain at S {} < gain at T {}",
                        fsv - fs,
                        ftv - ft
                    );
                }
            }
        }
    }

    #[test]
    fn exact_objective_uses_strict_inequality() {
        let inst = BipartiteInstance::new(
            1,
            2,
            &[(0, 0, 0.5), (0, 1, 0.4)],
            ThresholdSpec::Explicit {
                values: vec![0.5, 0.1],
            },
        )
        .unwrap();
        // Target 0 sits exactly at its threshold: not counted.
        assert_eq!(exact_objective(&inst, &[0.5, 0.1], &[0]).unwrap(), 1);
        // The cascade convention (>=) does count it.
        assert_eq!(simulate_spread(&inst, &[0], 0).unwrap(), 2);
    }

    #[test]
    fn simulate_empty_set_counts_nonpositive_thresholds() {
        let inst = BipartiteInstance::new(
            1,
            3,
            &[(0, 0, 1.0)],
            ThresholdSpec::Explicit {
                values: vec![-0.2, 0.0, 0.3],
            },
        )
        .unwrap();
        // Load 0 >= theta exactly for theta in {-0.2, 0.0}.
        assert_eq!(simulate_spread(&inst, &[], 7).unwrap(), 2);
    }

    #[test]
    fn monte_carlo_agrees_with_closed_forms() {
        for (seed, spec) in [
            (1u64, ThresholdSpec::uniform(0.5)),
            (2, ThresholdSpec::normal(0.4)),
        ] {
            let mut inst = random_instance(seed, 6, 8);
            inst.thresholds = spec.clone();
            let s = vec![0, 2, 4];
            let mc = simulate_mean(&inst, &s, 200_000, 99).unwrap();
            let h = objective_value(&inst, &spec, &s).unwrap();
            assert!(
                (mc.mean - h).abs() <= 3.0 * mc.std_err.max(1e-4),
                "mc {} vs closed {h} (3se {})",
                mc.mean,
                3.0 * mc.std_err
            );
        }
    }

    #[test]
    fn greedy_hits_brute_force_on_modular_instances() {
        // Disjoint columns make the objective modular: greedy is optimal.
        let inst = BipartiteInstance::new(
            3,
            6,
            &[
                (0, 0, 0.3),
                (0, 1, 0.3),
                (1, 2, 0.2),
                (1, 3, 0.2),
                (2, 4, 0.1),
            ],
            ThresholdSpec::uniform(0.5),
        )
        .unwrap();
        let spec = ThresholdSpec::uniform(0.5);
        let (greedy, trace) = greedy_maximize(&inst, &spec, &[0, 1, 2], 2).unwrap();
        let (opt, opt_value) = brute_force_optimum(&inst, &spec, &[0, 1, 2], 2).unwrap();
        assert_eq!(greedy, vec![0, 1]);
        assert_eq!(opt, vec![0, 1]);
        assert!((trace[1] - opt_value).abs() < 1e-12);
        assert!(trace[0] <= trace[1]);
    }

    #[test]
    fn greedy_single_candidate_zero_gain_keeps_empty_optimum() {
        // One seed with an all-zero column: greedy still picks it (zero
        // gain continues), but the brute force keeps the empty set by the
        // lexicographic tie rule.
        let inst =
            BipartiteInstance::new(1, 2, &[], ThresholdSpec::uniform(0.5)).unwrap();
        let spec = ThresholdSpec::uniform(0.5);
        let (greedy, _) = greedy_maximize(&inst, &spec, &[0], 1).unwrap();
        assert_eq!(greedy, vec![0]);
        let (opt, _) = brute_force_optimum(&inst, &spec, &[0], 1).unwrap();
        assert!(opt.is_empty());
    }

    #[test]
    fn brute_force_budget_guard_trips() {
        let inst = random_instance(3, 60, 4);
        let seeds = inst.seeds();
        let err =
            brute_force_optimum(&inst, &ThresholdSpec::uniform(0.5), &seeds, 8).unwrap_err();
        match err {
            Error::SubsetBudget { count, .. } => assert!(count > 1_000_000),
            other => panic!("expected budget error, got {other}"),
        }
    }

    #[test]
    fn setcover_reduction_recovers_planted_cover() {
        // Universe {0..5}, subsets such that {0, 2} is an exact cover.
        let subsets = vec![
            vec![0, 1, 2],
            vec![1, 3],
            vec![3, 4, 5],
            vec![0, 4],
        ];
        let inst = setcover_instance(6, &subsets, 1.0).unwrap();
        assert!(setcover_decision(&inst, 2).unwrap());
        // No single subset covers everything.
        assert!(!setcover_decision(&inst, 1).unwrap());
    }

    #[test]
    fn setcover_uncoverable_element_fails_decision() {
        // Element 3 appears in no subset.
        let subsets = vec![vec![0, 1], vec![2]];
        let inst = setcover_instance(4, &subsets, 2.0).unwrap();
        assert!(!setcover_decision(&inst, 2).unwrap());
        assert!(setcover_instance(0, &subsets, 1.0).is_err());
    }

    #[test]
    fn instance_json_round_trips_including_infinities() {
        let inst = BipartiteInstance::new(
            2,
            3,
            &[(0, 0, 0.5), (1, 2, 0.25)],
            ThresholdSpec::Explicit {
                values: vec![0.1, f64::INFINITY, -0.5],
            },
        )
        .unwrap();
        let text = serde_json::to_string(&inst).unwrap();
        assert!(text.contains("\"inf\""));
        let back: BipartiteInstance = serde_json::from_str(&text).unwrap();
        assert_eq!(inst, back);

        let family = BipartiteInstance::new(
            2,
            2,
            &[(0, 1, 1.0)],
            ThresholdSpec::uniform(0.01),
        )
        .unwrap();
        let text = serde_json::to_string(&family).unwrap();
        assert!(text.contains("\"family\":\"uniform\""));
        let back: BipartiteInstance = serde_json::from_str(&text).unwrap();
        assert_eq!(family, back);
    }

    #[test]
    fn instance_rejects_bad_weights() {
        assert!(BipartiteInstance::new(
            1,
            1,
            &[(0, 0, -0.5)],
            ThresholdSpec::uniform(1.0)
        )
        .is_err());
        assert!(BipartiteInstance::new(
            1,
            1,
            &[(0, 0, 0.5), (0, 0, 0.2)],
            ThresholdSpec::uniform(1.0)
        )
        .is_err());
        assert!(BipartiteInstance::new(
            1,
            2,
            &[],
            ThresholdSpec::Explicit { values: vec![0.0] }
        )
        .is_err());
    }
}
