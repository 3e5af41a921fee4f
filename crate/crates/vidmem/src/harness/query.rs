//! The querying stage: embed the query, retrieve keyframes from a snapshot,
//! price the query with the cost model, and dispatch to the reasoner.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{CostModel, PipelineConfig, RetrievalConfig};
use crate::error::{Error, Result};
use crate::embedding::Embedder;
use crate::retrieval::{retrieve_adaptive, retrieve_fixed, retrieve_topk, RetrievalResult};
use crate::store::{MemoryStore, Snapshot};
use crate::types::{Frame, LatencyBreakdown};

use super::reasoner::Reasoner;

/// Keyframe selection strategy of a single query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// Adaptive progressive sampling.
    Akr,
    /// Fixed-budget sampling.
    Fixed,
    /// Greedy top-k baseline.
    Topk,
}

impl StrategyKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "akr" => Ok(StrategyKind::Akr),
            "fixed" => Ok(StrategyKind::Fixed),
            "topk" => Ok(StrategyKind::Topk),
            other => Err(Error::UnknownStrategy(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Akr => "akr",
            StrategyKind::Fixed => "fixed",
            StrategyKind::Topk => "topk",
        }
    }
}

/// Everything recorded about one answered query.
#[derive(Debug, Clone, Serialize)]
pub struct QueryRecord {
    pub query: String,
    pub arrival_s: f64,
    pub strategy: String,
    pub seed: u64,
    pub result: RetrievalResult,
    pub latency: LatencyBreakdown,
    pub answer: Option<String>,
    /// Reasoner transport failures are recorded, not fatal.
    pub reasoner_error: Option<String>,
}

/// Runs one retrieval with the given strategy against a snapshot.
pub fn retrieve_with_strategy(
    strategy: StrategyKind,
    query_vec: &crate::types::EmbeddingVector,
    snapshot: &Snapshot,
    retrieval: &RetrievalConfig,
) -> Result<RetrievalResult> {
    match strategy {
        StrategyKind::Akr => {
            let mut config = retrieval.clone();
            config.n_fixed = None;
            retrieve_adaptive(query_vec, snapshot, &config)
        }
        StrategyKind::Fixed => {
            let mut config = retrieval.clone();
            config.n_fixed = Some(retrieval.n_fixed.unwrap_or(retrieval.n_max));
            retrieve_fixed(query_vec, snapshot, &config)
        }
        StrategyKind::Topk => {
            let k = retrieval.n_fixed.unwrap_or(retrieval.n_max);
            retrieve_topk(query_vec, snapshot, k, retrieval.temperature)
        }
    }
}

/// Analytic per-query latency: the device embeds the query text, the selected
/// keyframes cross the link, and the cloud model charges its base plus
/// per-frame cost.
pub fn query_latency(cost: &CostModel, keyframes_sent: u64) -> LatencyBreakdown {
    let bytes = keyframes_sent * cost.frame_bytes;
    LatencyBreakdown::new(
        cost.embed_latency_s,
        bytes as f64 * 8.0 / cost.bandwidth_bps,
        cost.cloud_base_s + cost.cloud_per_frame_s * keyframes_sent as f64,
    )
}

/// End-to-end query against an on-disk memory store.
pub fn run_query(
    query_text: &str,
    memory_root: &Path,
    config: &PipelineConfig,
    strategy: StrategyKind,
    reasoner: &Reasoner,
    cost: &CostModel,
    arrival_s: f64,
) -> Result<QueryRecord> {
    let store = MemoryStore::open(memory_root)?;
    let snapshot = store.open_snapshot();
    run_query_on_snapshot(query_text, &snapshot, config, strategy, reasoner, cost, arrival_s)
}

/// Same as [`run_query`] but reusing an open snapshot.
pub fn run_query_on_snapshot(
    query_text: &str,
    snapshot: &Snapshot,
    config: &PipelineConfig,
    strategy: StrategyKind,
    reasoner: &Reasoner,
    cost: &CostModel,
    arrival_s: f64,
) -> Result<QueryRecord> {
    if snapshot.is_empty() {
        return Err(Error::MemoryEmpty);
    }
    let embedder = Embedder::from_config(&config.embedding)?;
    let query_vec = embedder.embed_text(query_text)?;
    let result = retrieve_with_strategy(strategy, &query_vec, snapshot, &config.retrieval)?;
    let latency = query_latency(cost, result.keyframe_ids.len() as u64);

    let keyframes: Vec<Frame> = result
        .keyframe_ids
        .iter()
        .map(|&id| snapshot.load_frame(id))
        .collect::<Result<_>>()?;
    let (answer, reasoner_error) = match reasoner.reason(query_text, &keyframes) {
        Ok(answer) => (Some(answer), None),
        Err(e) => (None, Some(e.to_string())),
    };

    Ok(QueryRecord {
        query: query_text.to_string(),
        arrival_s,
        strategy: strategy.name().to_string(),
        seed: config.retrieval.seed,
        result,
        latency,
        answer,
        reasoner_error,
    })
}
