//! Construction of the shared feature perturbation: train proxy models
//! on independent splits, keep the features whose gradient sign is
//! stable across them, and set the strongest ones to plus or minus
//! lambda.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{derive_seed, streams};
use crate::victim::{gradient_scores, random_split, train, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    /// Magnitude written into every perturbed feature.
    pub lambda: f64,
    /// Fraction of feature dimensions perturbed, cut off at the floor.
    pub top_fraction: f64,
    /// Fraction of score sets that must agree in sign before a feature
    /// qualifies; zero scores count against agreement.
    pub sign_agreement: f64,
    pub n_proxies: usize,
    /// Point the perturbation against the gradient instead of along it.
    pub flip_sign: bool,
}

impl Default for PerturbationSpec {
    fn default() -> PerturbationSpec {
        PerturbationSpec {
            lambda: 10.0,
            top_fraction: 0.02,
            sign_agreement: 0.8,
            n_proxies: 20,
            flip_sign: false,
        }
    }
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.top_fraction > 0.0 && self.top_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "top_fraction must lie in (0, 1], got {}",
                self.top_fraction
            )));
        }
        if !(self.sign_agreement > 0.5 && self.sign_agreement <= 1.0) {
            return Err(Error::invalid(format!(
                "sign_agreement must lie in (0.5, 1], got {}",
                self.sign_agreement
            )));
        }
        if self.n_proxies == 0 {
            return Err(Error::invalid("need at least one proxy"));
        }
        Ok(())
    }
}

/// Aggregate per-feature gradient scores into the perturbation vector.
/// A feature survives when at least `sign_agreement` of the sets give it
/// the same sign; the top `floor(top_fraction * D)` survivors by mean
/// absolute score get `lambda` with the majority sign, everything else
/// stays zero.
pub fn build_epsilon(score_sets: &[Vec<f64>], spec: &PerturbationSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let t = score_sets.len();
    if t == 0 {
        return Err(Error::invalid("need at least one score set"));
    }
    let d = score_sets[0].len();
    if d == 0 {
        return Err(Error::invalid("score sets are empty"));
    }
    for (idx, set) in score_sets.iter().enumerate() {
        if set.len() != d {
            return Err(Error::invalid(format!(
                "score set {idx} has {} entries, expected {d}",
                set.len()
            )));
        }
        if set.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("score set {idx} contains a non-finite entry")));
        }
    }

    let mut kept: Vec<(usize, f64, f64)> = Vec::new();
    for j in 0..d {
        let mut pos = 0usize;
        let mut neg = 0usize;
        let mut abs_sum = 0.0;
        for set in score_sets {
            let v = set[j];
            if v > 0.0 {
                pos += 1;
            } else if v < 0.0 {
                neg += 1;
            }
            abs_sum += v.abs();
        }
        let (dominant, sign) = if pos >= neg { (pos, 1.0) } else { (neg, -1.0) };
        if dominant as f64 / t as f64 >= spec.sign_agreement {
            kept.push((j, abs_sum / t as f64, sign));
        }
    }
    let cutoff = (spec.top_fraction * d as f64).floor() as usize;
    let take = cutoff.min(kept.len());
    if take == 0 {
        return Err(Error::invalid(format!(
            "no feature qualifies for perturbation: {} of {d} dimensions pass the \
             {} sign-agreement bar across {t} score sets and the cutoff keeps {cutoff}",
            kept.len(),
            spec.sign_agreement
        )));
    }
    kept.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));

    let orient = if spec.flip_sign { -1.0 } else { 1.0 };
    let mut eps = vec![0.0; d];
    for &(j, _, sign) in &kept[..take] {
        eps[j] = orient * sign * spec.lambda;
    }
    Ok(eps)
}

/// Gradient score sets from independently trained proxy models, plus
/// how many trainings diverged and were dropped.
#[derive(Debug)]
pub struct ProxyEnsemble {
    pub scores: Vec<Vec<f64>>,
    pub n_failed: usize,
}

/// Train `n_proxies` models on fresh splits derived from `rng_seed` and
/// collect their feature gradient scores. Numerically diverged
/// trainings are skipped; at least one proxy must survive.
pub fn proxy_scores(
    g: &Graph,
    n_proxies: usize,
    config: &TrainConfig,
    rng_seed: u64,
) -> Result<ProxyEnsemble> {
    if n_proxies == 0 {
        return Err(Error::invalid("need at least one proxy"));
    }
    let mut scores = Vec::new();
    let mut n_failed = 0usize;
    for idx in 0..n_proxies {
        let split = random_split(
            g.n(),
            0.6,
            0.2,
            derive_seed(rng_seed, streams::PROXY_SPLIT, idx as u64),
        )?;
        let proxy_config = TrainConfig {
            seed: derive_seed(rng_seed, streams::PROXY_INIT, idx as u64),
            ..*config
        };
        match train(g, &split, &proxy_config) {
            Ok(model) => scores.push(gradient_scores(&model, g)?),
            Err(Error::Numeric(msg)) => {
                log::warn!("proxy {idx} diverged and was dropped: {msg}");
                n_failed += 1;
            }
            Err(other) => return Err(other),
        }
    }
    if scores.is_empty() {
        return Err(Error::Numeric(format!("all {n_proxies} proxy trainings diverged")));
    }
    Ok(ProxyEnsemble { scores, n_failed })
}

/// Write the perturbation as CSV: a comment line with the dimension and
/// magnitude, a column header, then one `feature_index,value` row per
/// nonzero in ascending index order.
pub fn write_epsilon(path: &std::path::Path, eps: &[f64], lambda: f64) -> Result<()> {
    let mut out = format!("# D={} lambda={lambda}\nfeature_index,value\n", eps.len());
    for (j, &v) in eps.iter().enumerate() {
        if v != 0.0 {
            out.push_str(&format!("{j},{v}\n"));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_epsilon(path: &std::path::Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty perturbation file"))?;
    if !header.starts_with('#') {
        return Err(Error::parse(path, 1, "expected a `# D=... lambda=...` header"));
    }
    let mut dim: Option<usize> = None;
    for token in header.trim_start_matches('#').split_whitespace() {
        if let Some(v) = token.strip_prefix("D=") {
            dim = v.parse().ok();
        }
    }
    let d = dim.ok_or_else(|| Error::parse(path, 1, "header does not state D"))?;

    let mut eps = vec![0.0; d];
    let mut seen = vec![false; d];
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() || line == "feature_index,value" {
            continue;
        }
        let lineno = idx + 1;
        let (j_text, v_text) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(path, lineno, "expected `feature_index,value`"))?;
        let j: usize = j_text
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad feature index {j_text:?}")))?;
        let v: f64 = v_text
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad value {v_text:?}")))?;
        if j >= d {
            return Err(Error::parse(path, lineno, format!("feature index {j} exceeds D={d}")));
        }
        if seen[j] {
            return Err(Error::parse(path, lineno, format!("duplicate feature index {j}")));
        }
        if !v.is_finite() {
            return Err(Error::parse(path, lineno, format!("non-finite value for feature {j}")));
        }
        seen[j] = true;
        eps[j] = v;
    }
    Ok(eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_sbm, SBMConfig};

    fn spec(top_fraction: f64) -> PerturbationSpec {
        PerturbationSpec {
            top_fraction,
            ..PerturbationSpec::default()
        }
    }

    #[test]
    fn single_set_follows_the_gradient_signs() {
        let mut scores = vec![0.0; 10];
        scores[0] = 1.0;
        scores[1] = -2.0;
        let eps = build_epsilon(&[scores], &spec(0.2)).unwrap();
        assert_eq!(eps[0], 10.0);
        assert_eq!(eps[1], -10.0);
        assert!(eps[2..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn all_zero_scores_are_rejected() {
        let err = build_epsilon(&[vec![0.0; 10]], &spec(0.2)).unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
        assert!(err.to_string().contains("0 of 10"));
    }

    #[test]
    fn planted_consistent_features_are_recovered_exactly() {
        // 20 sets over 50 dimensions. Four planted dimensions keep a
        // fixed sign and dominant magnitude in every set; the rest
        // alternate sign per set, so their agreement is exactly half
        // and the filter removes them no matter how large they are.
        let planted = [(3usize, 1.0), (11, -1.0), (27, 1.0), (40, -1.0)];
        let sets: Vec<Vec<f64>> = (0..20)
            .map(|t| {
                let mut s = vec![0.0; 50];
                for j in 0..50 {
                    s[j] = if t % 2 == 0 { 9.0 } else { -9.0 };
                }
                for &(j, sign) in &planted {
                    s[j] = sign * (5.0 + 0.1 * t as f64);
                }
                s
            })
            .collect();
        let eps = build_epsilon(&sets, &spec(0.08)).unwrap();
        let nonzero: Vec<usize> = (0..50).filter(|&j| eps[j] != 0.0).collect();
        assert_eq!(nonzero, vec![3, 11, 27, 40]);
        for &(j, sign) in &planted {
            assert_eq!(eps[j], sign * 10.0);
        }
    }

    #[test]
    fn nonzero_count_is_cutoff_or_survivors() {
        // Three consistent dimensions but a cutoff of five: all three
        // survive. A cutoff of two keeps the two largest means.
        let sets: Vec<Vec<f64>> = (0..4)
            .map(|_| {
                let mut s = vec![0.0; 100];
                s[5] = 3.0;
                s[6] = 1.0;
                s[7] = -2.0;
                s
            })
            .collect();
        let eps = build_epsilon(&sets, &spec(0.05)).unwrap();
        assert_eq!(eps.iter().filter(|&&v| v != 0.0).count(), 3);
        let eps = build_epsilon(&sets, &spec(0.02)).unwrap();
        let nonzero: Vec<usize> = (0..100).filter(|&j| eps[j] != 0.0).collect();
        assert_eq!(nonzero, vec![5, 7]);
    }

    #[test]
    fn ties_at_the_cutoff_prefer_lower_indices() {
        let mut s = vec![0.0; 10];
        s[4] = 2.0;
        s[8] = -2.0;
        s[9] = 2.0;
        let eps = build_epsilon(&[s], &spec(0.2)).unwrap();
        let nonzero: Vec<usize> = (0..10).filter(|&j| eps[j] != 0.0).collect();
        assert_eq!(nonzero, vec![4, 8]);
    }

    #[test]
    fn scaling_scores_changes_nothing() {
        // Distinct mean magnitudes per dimension, so the ranking has no
        // ties that rounding of the rescaled sums could flip.
        let sets: Vec<Vec<f64>> = (0..6)
            .map(|t| {
                (0..30)
                    .map(|j| {
                        let sign = if j % 3 == 0 { -1.0 } else { 1.0 };
                        sign * (1.0 + 0.37 * j as f64 + 0.01 * t as f64)
                    })
                    .collect()
            })
            .collect();
        let relaxed = PerturbationSpec {
            top_fraction: 0.2,
            sign_agreement: 0.6,
            ..PerturbationSpec::default()
        };
        let base = build_epsilon(&sets, &relaxed).unwrap();
        for scale in [1e-6, 3.0, 5e8] {
            let scaled: Vec<Vec<f64>> = sets
                .iter()
                .map(|s| s.iter().map(|v| v * scale).collect())
                .collect();
            assert_eq!(base, build_epsilon(&scaled, &relaxed).unwrap());
        }
    }

    #[test]
    fn flip_sign_inverts_the_vector() {
        let mut s = vec![0.0; 10];
        s[2] = 1.0;
        s[3] = -4.0;
        let forward = build_epsilon(&[s.clone()], &spec(0.2)).unwrap();
        let flipped = build_epsilon(
            &[s],
            &PerturbationSpec {
                top_fraction: 0.2,
                flip_sign: true,
                ..PerturbationSpec::default()
            },
        )
        .unwrap();
        for j in 0..10 {
            assert_eq!(forward[j], -flipped[j]);
        }
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let s = vec![vec![1.0; 4]];
        for bad in [
            PerturbationSpec { lambda: 0.0, ..PerturbationSpec::default() },
            PerturbationSpec { top_fraction: 0.0, ..PerturbationSpec::default() },
            PerturbationSpec { top_fraction: 1.5, ..PerturbationSpec::default() },
            PerturbationSpec { sign_agreement: 0.5, ..PerturbationSpec::default() },
            PerturbationSpec { n_proxies: 0, ..PerturbationSpec::default() },
        ] {
            assert!(build_epsilon(&s, &bad).is_err());
        }
        assert!(build_epsilon(&[], &spec(0.5)).is_err());
        assert!(build_epsilon(&[vec![1.0, 2.0], vec![1.0]], &spec(0.5)).is_err());
        assert!(build_epsilon(&[vec![f64::NAN, 1.0]], &spec(0.5)).is_err());
    }

    #[test]
    fn csv_round_trips_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("epsilon.csv");
        let mut eps = vec![0.0; 40];
        eps[4] = 10.0;
        eps[31] = -10.0;
        write_epsilon(&path, &eps, 10.0).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# D=40 lambda=10\nfeature_index,value\n"));
        assert_eq!(read_epsilon(&path).unwrap(), eps);

        std::fs::write(&path, "# D=5 lambda=1\n2,1\n2,1\n").unwrap();
        assert!(matches!(read_epsilon(&path).unwrap_err(), Error::Parse { line: 3, .. }));
        std::fs::write(&path, "# D=5 lambda=1\n7,1\n").unwrap();
        assert!(read_epsilon(&path).is_err());
        std::fs::write(&path, "3,1\n").unwrap();
        assert!(read_epsilon(&path).is_err());
    }

    fn proxy_graph(seed: u64) -> Graph {
        let cfg = SBMConfig {
            n_communities: 2,
            nodes_per_community: 30,
            p_in: 0.2,
            p_out: 0.02,
            feature_dim: 6,
            signal: 1.5,
            noise_sd: 0.5,
            seed,
        };
        generate_sbm(&cfg).unwrap()
    }

    fn quick_config() -> TrainConfig {
        TrainConfig {
            hidden: 8,
            epochs: 60,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn proxies_are_deterministic_per_seed() {
        let g = proxy_graph(1);
        let a = proxy_scores(&g, 2, &quick_config(), 42).unwrap();
        let b = proxy_scores(&g, 2, &quick_config(), 42).unwrap();
        assert_eq!(a.scores, b.scores);
        assert_eq!(a.n_failed, 0);
        // Different ensemble seeds give different proxies.
        let c = proxy_scores(&g, 2, &quick_config(), 43).unwrap();
        assert_ne!(a.scores, c.scores);
        // Within one ensemble the two proxies differ as well.
        assert_ne!(a.scores[0], a.scores[1]);
    }

    #[test]
    fn informative_features_agree_in_sign_across_proxies() {
        // Graph from the blockmodel, but with hand-made features: the
        // first two dimensions carry the class signal, the remaining
        // six are pure noise. Gradient signs on the signal dimensions
        // reflect the data and must line up across independently
        // trained proxies far more often than signs on noise.
        let base = proxy_graph(2);
        let labels = base.labels().unwrap().to_vec();
        let mut rng = crate::rng::rng_from_seed(9);
        let mut features = ndarray::Array2::zeros((base.n(), 8));
        for i in 0..base.n() {
            for d in 0..8 {
                let mean = if d < 2 && labels[i] == d { 2.0 } else { 0.0 };
                let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
                features[(i, d)] = mean + 0.5 * z;
            }
        }
        let mut edges = Vec::new();
        for i in 0..base.n() {
            for &j in base.neighbors(i) {
                if i < j {
                    edges.push((i, j));
                }
            }
        }
        let ids: Vec<String> = (0..base.n()).map(|i| base.node_id(i).to_string()).collect();
        let g = Graph::from_indexed(ids, &edges, Some(features), Some(labels)).unwrap();

        let ensemble = proxy_scores(&g, 5, &quick_config(), 7).unwrap();
        let agreement = |dim: usize| -> f64 {
            let mut same = 0usize;
            let mut pairs = 0usize;
            for a in 0..ensemble.scores.len() {
                for b in (a + 1)..ensemble.scores.len() {
                    pairs += 1;
                    if ensemble.scores[a][dim].signum() == ensemble.scores[b][dim].signum() {
                        same += 1;
                    }
                }
            }
            same as f64 / pairs as f64
        };
        let signal = (agreement(0) + agreement(1)) / 2.0;
        let noise = (2..8).map(agreement).sum::<f64>() / 6.0;
        assert!(
            signal > noise,
            "signal agreement {signal} should beat noise agreement {noise}"
        );
    }
}
