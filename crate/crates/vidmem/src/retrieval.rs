//! Querying-stage retrieval: temperature softmax over index scores,
//! diversity-preserving multinomial sampling, intra-cluster uniform draws,
//! adaptive progressive sampling, and the greedy top-k baseline.
//!
//! Every operation is pure over a snapshot plus an explicit seed, so
//! arbitrarily many queries can run concurrently and a fixed
//! (seed, snapshot, config, query) tuple always reproduces the same result.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::RetrievalConfig;
use crate::error::{Error, Result};
use crate::hashmix::derive_seed;
use crate::store::Snapshot;
use crate::types::EmbeddingVector;

/// Salt of the sub-seed driving categorical index draws.
const COUNT_SEED_SALT: u64 = 0x636f_756e_7473;
/// Salt of the sub-seed driving intra-cluster frame draws.
const FRAME_SEED_SALT: u64 = 0x6672_616d_6573;

/// The per-query softmax distribution over indexed vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryDistribution {
    pub index_ids: Vec<u64>,
    pub scores: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub temperature: f64,
}

impl QueryDistribution {
    pub fn len(&self) -> usize {
        self.index_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_ids.is_empty()
    }

    pub fn probability_of(&self, index_id: u64) -> Option<f64> {
        self.index_ids
            .iter()
            .position(|&id| id == index_id)
            .map(|i| self.probabilities[i])
    }

    pub fn max_probability(&self) -> f64 {
        self.probabilities.iter().cloned().fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.index_ids.len() != self.scores.len()
            || self.index_ids.len() != self.probabilities.len()
        {
            return Err(Error::Retrieval("distribution length mismatch".into()));
        }
        if self.probabilities.iter().any(|&p| p.is_nan() || p <= 0.0) {
            return Err(Error::Retrieval("probabilities must be positive".into()));
        }
        let sum: f64 = self.probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Retrieval(format!("probabilities sum to {sum}")));
        }
        Ok(())
    }
}

/// Numerically stable temperature softmax over (index id, score) pairs:
/// `p_i = exp(s_i / tau) / sum_j exp(s_j / tau)`, computed with the max
/// logit subtracted before exponentiation.
pub fn softmax_distribution(scores: &[(u64, f64)], temperature: f64) -> Result<QueryDistribution> {
    if scores.is_empty() {
        return Err(Error::Retrieval("empty score list".into()));
    }
    if !temperature.is_finite() || temperature <= 0.0 {
        return Err(Error::Retrieval(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let logits: Vec<f64> = scores.iter().map(|&(_, s)| s / temperature).collect();
    let max_logit = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max_logit).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(QueryDistribution {
        index_ids: scores.iter().map(|&(id, _)| id).collect(),
        scores: scores.iter().map(|&(_, s)| s).collect(),
        probabilities: exps.iter().map(|&e| e / total).collect(),
        temperature,
    })
}

/// Inclusive-prefix cumulative probabilities.
fn cumulative(probabilities: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probabilities
        .iter()
        .map(|&p| {
            acc += p;
            acc
        })
        .collect()
}

/// One categorical draw: the smallest position whose cumulative probability
/// exceeds a uniform [0, 1) variate.
fn draw_position(cum: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

/// Draws `n_draws` independent categorical samples from the distribution,
/// returning the count per selected index id. Deterministic for a fixed seed.
pub fn sample_counts(
    dist: &QueryDistribution,
    n_draws: u64,
    seed: u64,
) -> Result<BTreeMap<u64, u64>> {
    if n_draws == 0 {
        return Err(Error::Retrieval("n_draws must be at least 1".into()));
    }
    dist.validate()?;
    let cum = cumulative(&dist.probabilities);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    for _ in 0..n_draws {
        let pos = draw_position(&cum, &mut rng);
        *counts.entry(dist.index_ids[pos]).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Uniformly draws `min(count, cluster size)` distinct member frames from
/// each selected index's cluster, then merges, dedupes, and orders the result
/// chronologically (timestamp, then frame id).
///
/// Each cluster draws from its own sub-seed (derived from `seed` and the
/// index id), so one cluster's draw count never perturbs another's picks.
pub fn draw_cluster_frames(
    counts: &BTreeMap<u64, u64>,
    snapshot: &Snapshot,
    seed: u64,
) -> Result<Vec<u64>> {
    let mut picked: Vec<(f64, u64)> = Vec::new();
    for (&index_id, &count) in counts {
        let record = snapshot
            .record(index_id)
            .ok_or_else(|| Error::Retrieval(format!("unknown index id {index_id}")))?;
        let cluster = snapshot
            .cluster_meta(record.cluster_id)
            .ok_or(Error::UnknownCluster(record.cluster_id))?;
        let members = &cluster.members;
        let take = (count as usize).min(members.len());
        let mut order: Vec<usize> = (0..members.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, index_id));
        for i in 0..take {
            let j = rng.random_range(i..order.len());
            order.swap(i, j);
        }
        for &slot in &order[..take] {
            let m = &members[slot];
            picked.push((m.timestamp, m.frame_id));
        }
    }
    picked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    picked.dedup_by_key(|p| p.1);
    Ok(picked.into_iter().map(|(_, id)| id).collect())
}

/// Outcome of the progressive sampling loop.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveRun {
    pub counts: BTreeMap<u64, u64>,
    pub total_draws: u64,
    /// Probability mass of the distinct selected indices.
    pub cumulative_probability: f64,
    /// The draw lower bound `beta * ceil(theta / max_i p_i)`.
    pub n_min: f64,
}

/// Threshold-driven progressive sampling: draws one categorical sample at a
/// time, maintaining the set of distinct selected indices and their counts.
/// Terminates when `(sum of selected p_j) / beta >= theta` and at least
/// `n_min = beta * ceil(theta / max p)` draws happened; always stops at
/// `n_max` draws.
///
/// Repeat draws of an already-selected index grow its count but not the
/// cumulative probability.
pub fn adaptive_sample(
    dist: &QueryDistribution,
    theta: f64,
    beta: f64,
    n_max: u64,
    seed: u64,
) -> Result<AdaptiveRun> {
    if n_max == 0 {
        return Err(Error::Retrieval("n_max must be at least 1".into()));
    }
    if !theta.is_finite() || theta <= 0.0 || theta > 1.0 {
        return Err(Error::Retrieval(format!("theta must be in (0, 1], got {theta}")));
    }
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::Retrieval(format!("beta must be positive, got {beta}")));
    }
    dist.validate()?;
    let n_min = beta * (theta / dist.max_probability()).ceil();
    let cum = cumulative(&dist.probabilities);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    let mut selected_mass = 0.0f64;
    let mut draws = 0u64;
    loop {
        let pos = draw_position(&cum, &mut rng);
        let id = dist.index_ids[pos];
        let entry = counts.entry(id).or_insert(0);
        if *entry == 0 {
            selected_mass += dist.probabilities[pos];
        }
        *entry += 1;
        draws += 1;
        if draws >= n_max {
            break;
        }
        if selected_mass / beta >= theta && draws as f64 >= n_min {
            break;
        }
    }
    Ok(AdaptiveRun {
        counts,
        total_draws: draws,
        cumulative_probability: selected_mass,
        n_min,
    })
}

/// A finished retrieval: the sampled index set, per-index draw counts, and
/// the chronologically ordered keyframes handed to the reasoner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    /// Distinct selected index ids, ascending.
    pub selected_index_ids: Vec<u64>,
    /// Draw count per selected index id.
    pub counts: BTreeMap<u64, u64>,
    /// Keyframe ids, ascending by timestamp, no duplicates.
    pub keyframe_ids: Vec<u64>,
    /// Probability mass of the distinct selected indices.
    pub cumulative_probability: f64,
    /// Number of draws performed (equals the count sum).
    pub total_draws: u64,
    /// The distribution the draws came from.
    pub plan_distribution: QueryDistribution,
}

impl RetrievalResult {
    fn assemble(
        dist: QueryDistribution,
        counts: BTreeMap<u64, u64>,
        total_draws: u64,
        keyframe_ids: Vec<u64>,
    ) -> Self {
        let selected_index_ids: Vec<u64> = counts.keys().copied().collect();
        let cumulative_probability = selected_index_ids
            .iter()
            .map(|id| dist.probability_of(*id).unwrap_or(0.0))
            .sum();
        RetrievalResult {
            selected_index_ids,
            counts,
            keyframe_ids,
            cumulative_probability,
            total_draws,
            plan_distribution: dist,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plan_distribution.validate()?;
        let count_sum: u64 = self.counts.values().sum();
        if count_sum != self.total_draws {
            return Err(Error::Retrieval(format!(
                "count sum {count_sum} != draws {}",
                self.total_draws
            )));
        }
        let selected: Vec<u64> = self.counts.keys().copied().collect();
        if selected != self.selected_index_ids {
            return Err(Error::Retrieval("selected ids disagree with counts".into()));
        }
        let recomputed: f64 = self
            .selected_index_ids
            .iter()
            .map(|id| self.plan_distribution.probability_of(*id).unwrap_or(0.0))
            .sum();
        if (recomputed - self.cumulative_probability).abs() > 1e-9 {
            return Err(Error::Retrieval(format!(
                "cumulative probability {} != recomputation {recomputed}",
                self.cumulative_probability
            )));
        }
        let mut deduped = self.keyframe_ids.clone();
        deduped.sort_unstable();
        deduped.dedup();
        if deduped.len() != self.keyframe_ids.len() {
            return Err(Error::Retrieval("duplicate keyframe ids".into()));
        }
        Ok(())
    }
}

fn scored_index(
    query: &EmbeddingVector,
    snapshot: &Snapshot,
    temperature: f64,
) -> Result<QueryDistribution> {
    let scores = snapshot.similarity_search(query, None)?;
    if scores.is_empty() {
        return Err(Error::MemoryEmpty);
    }
    softmax_distribution(&scores, temperature)
}

/// Fixed-budget sampling retrieval: `n_fixed` categorical draws, then uniform
/// intra-cluster frame draws.
pub fn retrieve_fixed(
    query: &EmbeddingVector,
    snapshot: &Snapshot,
    config: &RetrievalConfig,
) -> Result<RetrievalResult> {
    let n_fixed = config.n_fixed.ok_or_else(|| {
        Error::Retrieval("fixed-budget retrieval requires n_fixed".into())
    })? as u64;
    if n_fixed == 0 {
        return Err(Error::Retrieval("n_fixed must be at least 1".into()));
    }
    let dist = scored_index(query, snapshot, config.temperature)?;
    let counts = sample_counts(&dist, n_fixed, derive_seed(config.seed, COUNT_SEED_SALT))?;
    let keyframes = draw_cluster_frames(&counts, snapshot, derive_seed(config.seed, FRAME_SEED_SALT))?;
    Ok(RetrievalResult::assemble(dist, counts, n_fixed, keyframes))
}

/// Adaptive keyframe retrieval: progressive sampling with the theta/beta
/// termination rule, bounded by `n_max` draws.
pub fn retrieve_adaptive(
    query: &EmbeddingVector,
    snapshot: &Snapshot,
    config: &RetrievalConfig,
) -> Result<RetrievalResult> {
    if config.n_fixed.is_some() {
        return Err(Error::Retrieval(
            "adaptive retrieval requires n_fixed to be unset".into(),
        ));
    }
    let dist = scored_index(query, snapshot, config.temperature)?;
    let run = adaptive_sample(
        &dist,
        config.theta,
        config.beta,
        config.n_max as u64,
        derive_seed(config.seed, COUNT_SEED_SALT),
    )?;
    let keyframes =
        draw_cluster_frames(&run.counts, snapshot, derive_seed(config.seed, FRAME_SEED_SALT))?;
    Ok(RetrievalResult::assemble(dist, run.counts, run.total_draws, keyframes))
}

/// Greedy baseline: the k highest-scoring indices (score ties broken by lower
/// index id), one frame each -- the index frame itself -- in chronological
/// order. `k` larger than the index selects everything. The reported draw
/// count equals the number of selections.
pub fn retrieve_topk(
    query: &EmbeddingVector,
    snapshot: &Snapshot,
    k: usize,
    temperature: f64,
) -> Result<RetrievalResult> {
    if k == 0 {
        return Err(Error::Retrieval("k must be at least 1".into()));
    }
    let dist = scored_index(query, snapshot, temperature)?;
    let mut ranked: Vec<(u64, f64)> = dist
        .index_ids
        .iter()
        .copied()
        .zip(dist.scores.iter().copied())
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let take = k.min(ranked.len());
    let mut counts = BTreeMap::new();
    let mut picked: Vec<(f64, u64)> = Vec::with_capacity(take);
    for &(index_id, _) in &ranked[..take] {
        counts.insert(index_id, 1u64);
        let record = snapshot
            .record(index_id)
            .ok_or_else(|| Error::Retrieval(format!("unknown index id {index_id}")))?;
        let ts = snapshot
            .frame_meta(record.frame_id)
            .map(|m| m.timestamp)
            .unwrap_or(0.0);
        picked.push((ts, record.frame_id));
    }
    picked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let keyframes = picked.into_iter().map(|(_, id)| id).collect();
    Ok(RetrievalResult::assemble(dist, counts, take as u64, keyframes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{InsertItem, MemoryStore};
    use crate::types::{Cluster, Frame, IndexedFrame};
    use proptest::prelude::*;

    /// Store with one cluster per entry; member counts and embedding axes
    /// are caller-controlled so scores are exact.
    fn store_with(entries: &[(u64, usize, usize)], dimension: usize) -> (tempfile::TempDir, MemoryStore) {
        let dir = tempfile::tempdir().unwrap();
        let store = MemoryStore::create(dir.path(), dimension).unwrap();
        let mut next_frame = 0u64;
        let items: Vec<InsertItem> = entries
            .iter()
            .map(|&(index_id, member_count, axis)| {
                let mut raw = vec![0.0f64; dimension];
                raw[axis % dimension] = 1.0;
                let frames: Vec<Frame> = (0..member_count)
                    .map(|_| {
                        let f = Frame::solid(next_frame, next_frame as f64, 2, 2, [1, 2, 3]);
                        next_frame += 1;
                        f
                    })
                    .collect();
                InsertItem {
                    record: IndexedFrame {
                        index_id,
                        frame_id: frames[0].frame_id,
                        cluster_id: index_id,
                        aux_prompt: String::new(),
                        embedding: EmbeddingVector::normalized(&raw).unwrap(),
                    },
                    cluster: Cluster {
                        cluster_id: index_id,
                        partition_id: 0,
                        member_frame_ids: frames.iter().map(|f| f.frame_id).collect(),
                        centroid: vec![0.0],
                        index_frame_id: Some(frames[0].frame_id),
                    },
                    frames,
                }
            })
            .collect();
        store.insert_batch(items).unwrap();
        (dir, store)
    }

    fn uniform_dist(k: usize) -> QueryDistribution {
        softmax_distribution(&(0..k as u64).map(|i| (i, 0.5)).collect::<Vec<_>>(), 1.0).unwrap()
    }

    #[test]
    fn equal_scores_give_uniform_probabilities() {
        let dist = uniform_dist(5);
        for &p in &dist.probabilities {
            assert!((p - 0.2).abs() < 1e-12);
        }
        dist.validate().unwrap();
    }

    #[test]
    fn two_point_softmax_closed_form() {
        let dist = softmax_distribution(&[(0, 1.0), (1, 0.0)], 1.0).unwrap();
        let e = std::f64::consts::E;
        assert!((dist.probabilities[0] - e / (e + 1.0)).abs() < 1e-12);
        assert!((dist.probabilities[1] - 1.0 / (e + 1.0)).abs() < 1e-12);
        assert!((dist.probabilities[0] - 0.7311).abs() < 1e-4);
        assert!((dist.probabilities[1] - 0.2689).abs() < 1e-4);
    }

    #[test]
    fn lower_temperature_sharpens_argmax() {
        let scores: Vec<(u64, f64)> = (0..50).map(|i| (i, (i as f64 * 0.37).sin())).collect();
        let sharp = softmax_distribution(&scores, 0.1).unwrap();
        let smooth = softmax_distribution(&scores, 1.0).unwrap();
        assert!(sharp.max_probability() > smooth.max_probability());
    }

    #[test]
    fn empty_scores_rejected() {
        assert!(softmax_distribution(&[], 1.0).is_err());
        assert!(softmax_distribution(&[(0, 1.0)], 0.0).is_err());
    }

    #[test]
    fn single_entry_distribution_takes_all_draws() {
        let dist = softmax_distribution(&[(3, 0.9)], 1.0).unwrap();
        let counts = sample_counts(&dist, 7, 99).unwrap();
        assert_eq!(counts.len(), 1);
        assert_eq!(counts[&3], 7);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let dist = uniform_dist(6);
        let a = sample_counts(&dist, 100, 42).unwrap();
        let b = sample_counts(&dist, 100, 42).unwrap();
        let c = sample_counts(&dist, 100, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_four_way_counts_within_five_sigma() {
        let dist = uniform_dist(4);
        let n = 40_000u64;
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        let counts = sample_counts(&dist, n, 7).unwrap();
        assert_eq!(counts.values().sum::<u64>(), n);
        for (&id, &c) in &counts {
            let dev = (c as f64 - 10_000.0).abs();
            assert!(dev <= 5.0 * sigma, "index {id}: count {c} deviates {dev}");
        }
    }

    #[test]
    fn adaptive_terminates_immediately_on_dominant_index() {
        // Distribution (0.9, 0.05, 0.05): n_min = ceil(0.9 / 0.9) = 1, so the
        // run stops on the first draw iff it hits index 0.
        let dist = QueryDistribution {
            index_ids: vec![0, 1, 2],
            scores: vec![0.9f64.ln(), 0.05f64.ln(), 0.05f64.ln()],
            probabilities: vec![0.9, 0.05, 0.05],
            temperature: 1.0,
        };
        dist.validate().unwrap();
        let mut stopped_at_one = 0;
        for seed in 0..200 {
            let run = adaptive_sample(&dist, 0.9, 1.0, 64, seed).unwrap();
            assert!((run.n_min - 1.0).abs() < 1e-12);
            if run.total_draws == 1 {
                stopped_at_one += 1;
                assert_eq!(run.counts.keys().copied().collect::<Vec<_>>(), vec![0]);
                assert!(run.cumulative_probability >= 0.9);
            }
        }
        // P(first draw hits index 0) = 0.9; with 200 seeds this is far from 0
        // and far from 200.
        assert!(stopped_at_one > 140 && stopped_at_one < 200, "{stopped_at_one}");
    }

    #[test]
    fn adaptive_uniform_ten_needs_nine_distinct() {
        let dist = uniform_dist(10);
        for seed in 0..50 {
            let run = adaptive_sample(&dist, 0.9, 1.0, 1000, seed).unwrap();
            assert!((run.n_min - 9.0).abs() < 1e-12);
            assert!(run.counts.len() >= 9, "covered {} distinct", run.counts.len());
            assert!(run.cumulative_probability >= 0.9 - 1e-12);
            assert!(run.total_draws >= 9);
        }
    }

    #[test]
    fn adaptive_unsatisfiable_beta_exhausts_n_max() {
        // theta = 0.9, beta = 2, max p = 0.3: n_min = 2 * ceil(0.9/0.3) = 6
        // and the termination needs cumulative mass >= 1.8, which no
        // distribution reaches, so every run exhausts n_max.
        let dist = QueryDistribution {
            index_ids: vec![0, 1, 2, 3],
            scores: vec![0.0; 4],
            probabilities: vec![0.3, 0.3, 0.2, 0.2],
            temperature: 1.0,
        };
        for seed in 0..50 {
            let run = adaptive_sample(&dist, 0.9, 2.0, 24, seed).unwrap();
            assert!((run.n_min - 6.0).abs() < 1e-12);
            assert_eq!(run.total_draws, 24);
        }
    }

    #[test]
    fn cluster_draw_caps_at_cluster_size() {
        let (_dir, store) = store_with(&[(5, 2, 0)], 8);
        let snap = store.open_snapshot();
        let counts = BTreeMap::from([(5u64, 3u64)]);
        let frames = draw_cluster_frames(&counts, &snap, 11).unwrap();
        assert_eq!(frames, vec![0, 1], "both members, chronological");
    }

    #[test]
    fn cluster_draw_of_singleton_returns_it() {
        let (_dir, store) = store_with(&[(0, 1, 0)], 8);
        let snap = store.open_snapshot();
        let counts = BTreeMap::from([(0u64, 1u64)]);
        assert_eq!(draw_cluster_frames(&counts, &snap, 7).unwrap(), vec![0]);
    }

    /// Drawing 5 of 100 uniformly: over 10,000 seeded repetitions every
    /// member's selection frequency stays within 5 sigma of 5%
    /// (sigma for a Bernoulli(0.05) mean over 10k trials).
    #[test]
    fn cluster_draw_frequencies_are_uniform() {
        let (_dir, store) = store_with(&[(0, 100, 0)], 8);
        let snap = store.open_snapshot();
        let counts = BTreeMap::from([(0u64, 5u64)]);
        let reps = 10_000u64;
        let mut hits = vec![0u64; 100];
        for seed in 0..reps {
            for id in draw_cluster_frames(&counts, &snap, seed).unwrap() {
                hits[id as usize] += 1;
            }
        }
        let p = 0.05;
        let sigma = (reps as f64 * p * (1.0 - p)).sqrt();
        for (member, &h) in hits.iter().enumerate() {
            let dev = (h as f64 - reps as f64 * p).abs();
            assert!(dev <= 5.0 * sigma, "member {member}: {h} hits, deviation {dev}");
        }
    }

    #[test]
    fn fixed_retrieval_on_single_entry_memory() {
        let (_dir, store) = store_with(&[(0, 1, 0)], 8);
        let snap = store.open_snapshot();
        let query = EmbeddingVector::normalized(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let config = RetrievalConfig {
            n_fixed: Some(9),
            ..RetrievalConfig::default()
        };
        let result = retrieve_fixed(&query, &snap, &config).unwrap();
        assert_eq!(result.keyframe_ids, vec![0]);
        assert_eq!(result.counts[&0], 9);
        assert_eq!(result.total_draws, 9);
        result.validate().unwrap();
    }

    #[test]
    fn tiny_temperature_concentrates_on_argmax() {
        // Entries on axes 0..8; the query sits on axis 3, so entry 3 scores 1
        // and the rest 0. At tau = 0.01 the softmax mass on the argmax is
        // 1 / (1 + 7 e^{-100}), i.e. all draws hit it essentially always.
        let entries: Vec<(u64, usize, usize)> = (0..8).map(|i| (i as u64, 2, i)).collect();
        let (_dir, store) = store_with(&entries, 8);
        let snap = store.open_snapshot();
        let mut raw = vec![0.0f64; 8];
        raw[3] = 1.0;
        let query = EmbeddingVector::normalized(&raw).unwrap();
        let config = RetrievalConfig {
            n_fixed: Some(16),
            temperature: 0.01,
            ..RetrievalConfig::default()
        };
        for seed in 0..20u64 {
            let result = retrieve_fixed(&query, &snap, &RetrievalConfig { seed, ..config.clone() }).unwrap();
            assert!(result.plan_distribution.probability_of(3).unwrap() > 0.999);
            assert_eq!(result.selected_index_ids, vec![3], "seed {seed}");
            assert_eq!(result.counts[&3], 16);
        }
    }

    #[test]
    fn topk_extremes_and_sort_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let entries: Vec<(u64, usize, usize)> = (0..50).map(|i| (i as u64, 1, i)).collect();
        let (_dir, store) = store_with(&entries, 64);
        let snap = store.open_snapshot();
        let raw: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let query = EmbeddingVector::normalized(&raw).unwrap();

        // k = 1 picks the argmax index frame.
        let scores = snap.similarity_search(&query, None).unwrap();
        let argmax = scores
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .unwrap()
            .0;
        let top1 = retrieve_topk(&query, &snap, 1, 1.0).unwrap();
        assert_eq!(top1.selected_index_ids, vec![argmax]);

        // k beyond the index size selects everything.
        let all = retrieve_topk(&query, &snap, 500, 1.0).unwrap();
        assert_eq!(all.selected_index_ids.len(), 50);
        assert_eq!(all.total_draws, 50);

        // k = 8 matches an independent full-sort oracle exactly.
        let mut oracle = scores.clone();
        oracle.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut expected: Vec<u64> = oracle[..8].iter().map(|&(id, _)| id).collect();
        expected.sort_unstable();
        let top8 = retrieve_topk(&query, &snap, 8, 1.0).unwrap();
        assert_eq!(top8.selected_index_ids, expected);
        top8.validate().unwrap();
    }

    #[test]
    fn adaptive_rejects_fixed_budget_config() {
        let (_dir, store) = store_with(&[(0, 1, 0)], 8);
        let snap = store.open_snapshot();
        let query = EmbeddingVector::normalized(&[1.0; 8]).unwrap();
        let config = RetrievalConfig {
            n_fixed: Some(4),
            ..RetrievalConfig::default()
        };
        assert!(retrieve_adaptive(&query, &snap, &config).is_err());
    }

    #[test]
    fn empty_memory_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let store = MemoryStore::create(dir.path(), 8).unwrap();
        let snap = store.open_snapshot();
        let query = EmbeddingVector::normalized(&[1.0; 8]).unwrap();
        let config = RetrievalConfig {
            n_fixed: Some(4),
            ..RetrievalConfig::default()
        };
        assert!(matches!(retrieve_fixed(&query, &snap, &config), Err(Error::MemoryEmpty)));
        assert!(matches!(
            retrieve_adaptive(&query, &snap, &RetrievalConfig::default()),
            Err(Error::MemoryEmpty)
        ));
    }

    proptest! {
        #[test]
        fn softmax_is_shift_invariant(
            raw in proptest::collection::vec(-3.0f64..3.0, 1..40),
            shift in -10.0f64..10.0,
            tau in 0.05f64..5.0,
        ) {
            let scores: Vec<(u64, f64)> = raw.iter().enumerate().map(|(i, &s)| (i as u64, s)).collect();
            let shifted: Vec<(u64, f64)> = raw.iter().enumerate().map(|(i, &s)| (i as u64, s + shift)).collect();
            let a = softmax_distribution(&scores, tau).unwrap();
            let b = softmax_distribution(&shifted, tau).unwrap();
            for (pa, pb) in a.probabilities.iter().zip(&b.probabilities) {
                prop_assert!((pa - pb).abs() < 1e-12);
            }
        }

        #[test]
        fn softmax_normalizes(
            // Scores are cosines in [-1, 1]; tau down to 0.01 keeps the
            // logit spread within exp's underflow-free range.
            raw in proptest::collection::vec(-1.0f64..1.0, 1..60),
            tau in 0.01f64..10.0,
        ) {
            let scores: Vec<(u64, f64)> = raw.iter().enumerate().map(|(i, &s)| (i as u64, s)).collect();
            let dist = softmax_distribution(&scores, tau).unwrap();
            dist.validate().unwrap();
        }

        #[test]
        fn adaptive_draws_stay_in_bounds(
            weights in proptest::collection::vec(0.05f64..1.0, 2..12),
            theta in 0.1f64..1.0,
            seed in any::<u64>(),
        ) {
            let total: f64 = weights.iter().sum();
            let probabilities: Vec<f64> = weights.iter().map(|w| w / total).collect();
            let dist = QueryDistribution {
                index_ids: (0..probabilities.len() as u64).collect(),
                scores: probabilities.iter().map(|p| p.ln()).collect(),
                probabilities,
                temperature: 1.0,
            };
            let n_max = 64u64;
            let run = adaptive_sample(&dist, theta, 1.0, n_max, seed).unwrap();
            prop_assert!(run.total_draws <= n_max);
            prop_assert_eq!(run.counts.values().sum::<u64>(), run.total_draws);
            if run.total_draws < n_max {
                // Termination fired: both conditions held.
                prop_assert!(run.total_draws as f64 >= run.n_min);
                prop_assert!(run.cumulative_probability >= theta - 1e-12);
            }
        }
    }
}
