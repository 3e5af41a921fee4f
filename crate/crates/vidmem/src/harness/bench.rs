//! Strategy comparison over a scenario: ingest once, answer every query under
//! each strategy, and account frames, bytes, and analytic latency per
//! strategy. Ingestion-side embedding cost is amortized and reported in its
//! own column, never folded into per-query latency.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{CostModel, PipelineConfig};
use crate::embedding::Embedder;
use crate::error::{Error, Result};
use crate::hashmix::derive_seed;
use crate::retrieval::RetrievalResult;
use crate::store::{MemoryStore, Snapshot};
use crate::types::LatencyBreakdown;

use super::ingest::{run_ingestion, IngestionReport};
use super::query::{query_latency, retrieve_with_strategy, StrategyKind};
use super::source::{StreamSourceSpec, SyntheticSpec};

/// One benchmark query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioQuery {
    pub text: String,
    #[serde(default)]
    pub arrival_s: f64,
    /// Index into the synthetic scene script this query is about, when known.
    #[serde(default)]
    pub ground_truth_scene: Option<usize>,
}

/// A benchmark scenario: a stream, a query set, and a cost model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub stream: StreamSourceSpec,
    pub queries: Vec<ScenarioQuery>,
    #[serde(default)]
    pub cost_model: CostModel,
}

impl Scenario {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let scenario: Scenario = serde_json::from_slice(bytes)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&bytes)
    }

    pub fn validate(&self) -> Result<()> {
        self.stream.validate()?;
        if self.queries.is_empty() {
            return Err(Error::Source("scenario needs at least one query".into()));
        }
        Ok(())
    }
}

/// Strategies the simulator can price against each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    VenusAkr,
    VenusFixed,
    Topk,
    FullUpload,
    UniformSample,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::VenusAkr,
        Strategy::VenusFixed,
        Strategy::Topk,
        Strategy::FullUpload,
        Strategy::UniformSample,
    ];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "venus_akr" => Ok(Strategy::VenusAkr),
            "venus_fixed" => Ok(Strategy::VenusFixed),
            "topk" => Ok(Strategy::Topk),
            "full_upload" => Ok(Strategy::FullUpload),
            "uniform_sample" => Ok(Strategy::UniformSample),
            other => Err(Error::UnknownStrategy(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::VenusAkr => "venus_akr",
            Strategy::VenusFixed => "venus_fixed",
            Strategy::Topk => "topk",
            Strategy::FullUpload => "full_upload",
            Strategy::UniformSample => "uniform_sample",
        }
    }
}

/// Per-query accounting under one strategy.
#[derive(Debug, Clone, Serialize)]
pub struct QueryOutcome {
    pub text: String,
    pub frames_sent: u64,
    pub bytes_sent: u64,
    pub latency: LatencyBreakdown,
    /// Keyframe ids shipped (empty for whole-stream strategies).
    pub keyframe_ids: Vec<u64>,
    /// Distinct scripted scenes covered by the shipped frames (synthetic
    /// streams only).
    pub distinct_scenes_covered: Option<u64>,
    /// Whether the ground-truth scene was covered, when the query names one.
    pub ground_truth_hit: Option<bool>,
}

/// One strategy's row of the comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct StrategyReport {
    pub strategy: String,
    pub frames_sent_total: u64,
    pub bytes_sent_total: u64,
    pub mean_frames_sent: f64,
    pub total_latency: LatencyBreakdown,
    pub mean_latency: LatencyBreakdown,
    /// Amortized ingestion-side embedding cost (index frames x per-embedding
    /// cost), reported separately from query latency.
    pub ingest_embed_amortized_s: f64,
    pub mean_distinct_scenes: Option<f64>,
    pub ground_truth_hit_rate: Option<f64>,
    pub queries: Vec<QueryOutcome>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub stream_frames: u64,
    pub index_count: u64,
    pub ingestion: IngestionReport,
    pub strategies: Vec<StrategyReport>,
}

fn mean_breakdown(total: &LatencyBreakdown, n: usize) -> LatencyBreakdown {
    let n = n.max(1) as f64;
    LatencyBreakdown::new(
        total.on_device_s / n,
        total.transmission_s / n,
        total.cloud_s / n,
    )
}

/// Cost of shipping `frames_sent` whole-stream frames to the cloud with no
/// on-device work (the full-upload strategy's per-query price).
pub fn full_upload_latency(cost: &CostModel, frames_sent: u64) -> LatencyBreakdown {
    let bytes = frames_sent * cost.frame_bytes;
    LatencyBreakdown::new(
        0.0,
        bytes as f64 * 8.0 / cost.bandwidth_bps,
        cost.cloud_base_s + cost.cloud_per_frame_s * frames_sent as f64,
    )
}

/// Scene coverage of a set of shipped frame timestamps.
fn coverage(
    script: Option<&SyntheticSpec>,
    timestamps: &[f64],
    ground_truth: Option<usize>,
) -> (Option<u64>, Option<bool>) {
    let Some(spec) = script else {
        return (None, None);
    };
    let mut seen = std::collections::BTreeSet::new();
    for &t in timestamps {
        if let Some(scene) = spec.scene_of(t) {
            seen.insert(scene);
        }
    }
    let hit = ground_truth.map(|g| seen.contains(&g));
    (Some(seen.len() as u64), hit)
}

fn retrieval_timestamps(snapshot: &Snapshot, result: &RetrievalResult) -> Vec<f64> {
    result
        .keyframe_ids
        .iter()
        .filter_map(|&id| snapshot.frame_meta(id).map(|m| m.timestamp))
        .collect()
}

/// Prices every (strategy, query) pair of a scenario. The stream is ingested
/// once into `memory_root`; whole-stream strategies reuse the raw layer's
/// frame metadata for their accounting.
pub fn simulate_strategies(
    scenario: &Scenario,
    config: &PipelineConfig,
    strategies: &[Strategy],
    memory_root: &Path,
) -> Result<BenchReport> {
    scenario.validate()?;
    if strategies.is_empty() {
        return Err(Error::Retrieval("no strategies requested".into()));
    }
    let cost = &scenario.cost_model;
    let ingestion = run_ingestion(&scenario.stream, config, memory_root)?;
    let store = MemoryStore::open(memory_root)?;
    let snapshot = store.open_snapshot();
    let script = scenario.stream.synthetic();
    let embedder = Embedder::from_config(&config.embedding)?;

    let stream_frames = ingestion.frames_ingested;
    let all_frame_timestamps: Vec<f64> = {
        let mut metas: Vec<(u64, f64)> = snapshot
            .records()
            .flat_map(|r| {
                snapshot
                    .cluster_meta(r.cluster_id)
                    .map(|c| c.members.iter().map(|m| (m.frame_id, m.timestamp)).collect::<Vec<_>>())
                    .unwrap_or_default()
            })
            .collect();
        metas.sort_unstable_by_key(|&(id, _)| id);
        metas.into_iter().map(|(_, t)| t).collect()
    };

    let ingest_embed_amortized_s =
        ingestion.indexed_frames as f64 * (cost.embed_latency_s + cost.aux_latency_s);

    let mut reports = Vec::with_capacity(strategies.len());
    for &strategy in strategies {
        let mut outcomes = Vec::with_capacity(scenario.queries.len());
        for (query_idx, query) in scenario.queries.iter().enumerate() {
            let outcome = match strategy {
                Strategy::FullUpload => {
                    // Ship the entire stream; the cloud pays for every frame.
                    let frames_sent = stream_frames;
                    let bytes_sent = frames_sent * cost.frame_bytes;
                    let latency = full_upload_latency(cost, frames_sent);
                    let (scenes, hit) =
                        coverage(script, &all_frame_timestamps, query.ground_truth_scene);
                    QueryOutcome {
                        text: query.text.clone(),
                        frames_sent,
                        bytes_sent,
                        latency,
                        keyframe_ids: Vec::new(),
                        distinct_scenes_covered: scenes,
                        ground_truth_hit: hit,
                    }
                }
                Strategy::UniformSample => {
                    let budget =
                        (config.retrieval.n_fixed.unwrap_or(config.retrieval.n_max) as u64)
                            .min(stream_frames.max(1));
                    let mut timestamps = Vec::with_capacity(budget as usize);
                    if stream_frames > 0 {
                        for i in 0..budget {
                            // Evenly spaced positions over the stream.
                            let pos = if budget == 1 {
                                0
                            } else {
                                (i * (stream_frames - 1)) / (budget - 1)
                            };
                            timestamps.push(all_frame_timestamps[pos as usize]);
                        }
                        timestamps.dedup();
                    }
                    let frames_sent = timestamps.len() as u64;
                    let bytes_sent = frames_sent * cost.frame_bytes;
                    let latency = LatencyBreakdown::new(
                        0.0,
                        bytes_sent as f64 * 8.0 / cost.bandwidth_bps,
                        cost.cloud_base_s + cost.cloud_per_frame_s * frames_sent as f64,
                    );
                    let (scenes, hit) = coverage(script, &timestamps, query.ground_truth_scene);
                    QueryOutcome {
                        text: query.text.clone(),
                        frames_sent,
                        bytes_sent,
                        latency,
                        keyframe_ids: Vec::new(),
                        distinct_scenes_covered: scenes,
                        ground_truth_hit: hit,
                    }
                }
                Strategy::VenusAkr | Strategy::VenusFixed | Strategy::Topk => {
                    let kind = match strategy {
                        Strategy::VenusAkr => StrategyKind::Akr,
                        Strategy::VenusFixed => StrategyKind::Fixed,
                        _ => StrategyKind::Topk,
                    };
                    let mut retrieval = config.retrieval.clone();
                    retrieval.seed = derive_seed(config.retrieval.seed, query_idx as u64);
                    let query_vec = embedder.embed_text(&query.text)?;
                    let result = retrieve_with_strategy(kind, &query_vec, &snapshot, &retrieval)?;
                    let frames_sent = result.keyframe_ids.len() as u64;
                    let bytes_sent = frames_sent * cost.frame_bytes;
                    let latency = query_latency(cost, frames_sent);
                    let timestamps = retrieval_timestamps(&snapshot, &result);
                    let (scenes, hit) = coverage(script, &timestamps, query.ground_truth_scene);
                    QueryOutcome {
                        text: query.text.clone(),
                        frames_sent,
                        bytes_sent,
                        latency,
                        keyframe_ids: result.keyframe_ids,
                        distinct_scenes_covered: scenes,
                        ground_truth_hit: hit,
                    }
                }
            };
            outcomes.push(outcome);
        }

        let frames_sent_total: u64 = outcomes.iter().map(|o| o.frames_sent).sum();
        let bytes_sent_total: u64 = outcomes.iter().map(|o| o.bytes_sent).sum();
        let total_latency = LatencyBreakdown::new(
            outcomes.iter().map(|o| o.latency.on_device_s).sum(),
            outcomes.iter().map(|o| o.latency.transmission_s).sum(),
            outcomes.iter().map(|o| o.latency.cloud_s).sum(),
        );
        let scene_counts: Vec<u64> = outcomes
            .iter()
            .filter_map(|o| o.distinct_scenes_covered)
            .collect();
        let hits: Vec<bool> = outcomes.iter().filter_map(|o| o.ground_truth_hit).collect();
        let uses_index = matches!(
            strategy,
            Strategy::VenusAkr | Strategy::VenusFixed | Strategy::Topk
        );
        reports.push(StrategyReport {
            strategy: strategy.name().to_string(),
            frames_sent_total,
            bytes_sent_total,
            mean_frames_sent: frames_sent_total as f64 / outcomes.len().max(1) as f64,
            mean_latency: mean_breakdown(&total_latency, outcomes.len()),
            total_latency,
            ingest_embed_amortized_s: if uses_index { ingest_embed_amortized_s } else { 0.0 },
            mean_distinct_scenes: if scene_counts.is_empty() {
                None
            } else {
                Some(scene_counts.iter().sum::<u64>() as f64 / scene_counts.len() as f64)
            },
            ground_truth_hit_rate: if hits.is_empty() {
                None
            } else {
                Some(hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64)
            },
            queries: outcomes,
        });
    }

    Ok(BenchReport {
        stream_frames,
        index_count: ingestion.indexed_frames,
        ingestion,
        strategies: reports,
    })
}
