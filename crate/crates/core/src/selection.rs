//! Pure numeric kernels: similarity, novelty, diversity selection, donor
//! ranking, and composite scoring. Everything here is deterministic and
//! backend-free; ties always break toward the lowest index so results are
//! reproducible across runs.

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Weights;

#[derive(Debug, Error, PartialEq)]
pub enum SelectionError {
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("cosine similarity is undefined for a zero-magnitude vector")]
    ZeroVector,
    #[error("{what} must be non-empty")]
    EmptyInput { what: &'static str },
    #[error("cannot select {requested} items from {available}")]
    NotEnoughItems { requested: usize, available: usize },
    #[error("{name} must lie in [0, 1], got {value}")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("invalid weights: alpha+beta+gamma = {0}, must sum to 1")]
    BadWeights(f64),
}

fn check_dims(u: &[f64], v: &[f64]) -> Result<(), SelectionError> {
    if u.len() != v.len() {
        return Err(SelectionError::DimensionMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    if u.is_empty() {
        return Err(SelectionError::EmptyInput { what: "embedding" });
    }
    Ok(())
}

/// Cosine similarity of two equal-dimension vectors.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, SelectionError> {
    check_dims(u, v)?;
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(SelectionError::ZeroVector);
    }
    // sqrt(n)·sqrt(n) drifts off n by an ulp, so identical vectors would
    // come out at 1-2e-16 and a coincident candidate would never score a
    // flat zero distance.
    if u == v {
        return Ok(1.0);
    }
    Ok(dot / (nu.sqrt() * nv.sqrt()))
}

/// Novelty of a candidate against a set: one minus the highest cosine
/// similarity to any member, clamped to [0, 1].
pub fn novelty_vs_set(candidate: &[f64], known: &[Vec<f64>]) -> Result<f64, SelectionError> {
    if known.is_empty() {
        return Err(SelectionError::EmptyInput { what: "known set" });
    }
    let mut max_sim = f64::NEG_INFINITY;
    for member in known {
        let sim = cosine_similarity(candidate, member)?;
        if sim > max_sim {
            max_sim = sim;
        }
    }
    Ok((1.0 - max_sim).clamp(0.0, 1.0))
}

/// Distance used when spreading a selection across a set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionMetric {
    Euclidean,
    /// One minus cosine similarity; undefined on zero vectors.
    CosineDistance,
}

pub fn pairwise_distance(metric: DispersionMetric, u: &[f64], v: &[f64]) -> Result<f64, SelectionError> {
    match metric {
        DispersionMetric::Euclidean => {
            check_dims(u, v)?;
            Ok(u.iter()
                .zip(v)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt())
        }
        DispersionMetric::CosineDistance => Ok(1.0 - cosine_similarity(u, v)?),
    }
}

fn subset_score(
    metric: DispersionMetric,
    items: &[Vec<f64>],
    subset: &[usize],
) -> Result<f64, SelectionError> {
    let mut total = 0.0;
    for (pos, &i) in subset.iter().enumerate() {
        for &j in &subset[pos + 1..] {
            total += pairwise_distance(metric, &items[i], &items[j])?;
        }
    }
    Ok(total)
}

/// Picks the `m` items whose summed pairwise distance is largest. Up to
/// `exhaustive_limit` items every subset is scored; beyond that a greedy
/// heuristic starts from the farthest pair and repeatedly adds the item that
/// gains the most distance. Returned indices are ascending; ties prefer the
/// lexicographically smallest index tuple.
pub fn max_dispersion_subset(
    items: &[Vec<f64>],
    m: usize,
    metric: DispersionMetric,
    exhaustive_limit: usize,
) -> Result<Vec<usize>, SelectionError> {
    if items.is_empty() {
        return Err(SelectionError::EmptyInput { what: "items" });
    }
    if m == 0 || m > items.len() {
        return Err(SelectionError::NotEnoughItems {
            requested: m,
            available: items.len(),
        });
    }
    if m == 1 {
        return Ok(vec![0]);
    }
    if items.len() <= exhaustive_limit {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for subset in (0..items.len()).combinations(m) {
            let score = subset_score(metric, items, &subset)?;
            let better = match &best {
                None => true,
                // Combinations arrive in lexicographic order, so strict
                // improvement keeps the smallest tuple on ties.
                Some((best_score, _)) => score > *best_score,
            };
            if better {
                best = Some((score, subset));
            }
        }
        return Ok(best.expect("at least one subset").1);
    }

    let mut chosen: Vec<usize> = Vec::with_capacity(m);
    let mut best_pair = (0.0_f64, 0usize, 1usize);
    let mut first = true;
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            let d = pairwise_distance(metric, &items[i], &items[j])?;
            if first || d > best_pair.0 {
                best_pair = (d, i, j);
                first = false;
            }
        }
    }
    chosen.push(best_pair.1);
    chosen.push(best_pair.2);
    while chosen.len() < m {
        let mut best: Option<(f64, usize)> = None;
        for candidate in 0..items.len() {
            if chosen.contains(&candidate) {
                continue;
            }
            let mut gain = 0.0;
            for &c in &chosen {
                gain += pairwise_distance(metric, &items[candidate], &items[c])?;
            }
            let better = match best {
                None => true,
                Some((best_gain, _)) => gain > best_gain,
            };
            if better {
                best = Some((gain, candidate));
            }
        }
        chosen.push(best.expect("candidates remain").1);
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Role and surface embeddings of one item, borrowed from wherever the item
/// lives.
#[derive(Debug, Clone, Copy)]
pub struct DualEmbedding<'a> {
    pub role: &'a [f64],
    pub surface: &'a [f64],
}

/// One pool item scored against a target site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    /// Index into the pool the candidate came from.
    pub index: usize,
    pub role_similarity: f64,
    pub surface_similarity: f64,
    /// `role_similarity - lambda * surface_similarity`.
    pub objective: f64,
}

/// Ranks a pool against a target by `role_sim - lambda * surface_sim` and
/// returns the top `k`, highest objective first, ties to the lower index.
pub fn donor_topk(
    target: DualEmbedding,
    pool: &[DualEmbedding],
    k: usize,
    lambda: f64,
) -> Result<Vec<ScoredCandidate>, SelectionError> {
    if pool.is_empty() {
        return Err(SelectionError::EmptyInput { what: "pool" });
    }
    if k == 0 || k > pool.len() {
        return Err(SelectionError::NotEnoughItems {
            requested: k,
            available: pool.len(),
        });
    }
    let mut scored = Vec::with_capacity(pool.len());
    for (index, item) in pool.iter().enumerate() {
        let role_similarity = cosine_similarity(target.role, item.role)?;
        let surface_similarity = cosine_similarity(target.surface, item.surface)?;
        scored.push(ScoredCandidate {
            index,
            role_similarity,
            surface_similarity,
            objective: role_similarity - lambda * surface_similarity,
        });
    }
    scored.sort_by(|a, b| {
        b.objective
            .partial_cmp(&a.objective)
            .expect("objectives are finite")
            .then(a.index.cmp(&b.index))
    });
    scored.truncate(k);
    Ok(scored)
}

/// Feasibility, utility, novelty, and their weighted combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeScore {
    pub feasibility: f64,
    pub utility: f64,
    pub novelty: f64,
    pub composite: f64,
}

/// Combines the three component scores with the given weights.
pub fn composite_score(
    feasibility: f64,
    utility: f64,
    novelty: f64,
    weights: &Weights,
) -> Result<CompositeScore, SelectionError> {
    for (name, value) in [
        ("feasibility", feasibility),
        ("utility", utility),
        ("novelty", novelty),
    ] {
        if !(0.0..=1.0).contains(&value) || !value.is_finite() {
            return Err(SelectionError::OutOfRange { name, value });
        }
    }
    let sum = weights.alpha + weights.beta + weights.gamma;
    if (sum - 1.0).abs() > 1e-9 || weights.alpha < 0.0 || weights.beta < 0.0 || weights.gamma < 0.0 {
        return Err(SelectionError::BadWeights(sum));
    }
    Ok(CompositeScore {
        feasibility,
        utility,
        novelty,
        composite: weights.alpha * feasibility + weights.beta * utility + weights.gamma * novelty,
    })
}
