//! Analytic real-time feasibility of on-device ingestion.
//!
//! The device spends `segment_cluster_latency_s` per stream frame and
//! `embed_latency_s + aux_latency_s` per index frame. With a sparsification
//! ratio r (stream frames per index frame), utilization at a given fps is
//! `fps * seg + (fps / r) * per_index`; the stream is sustainable while that
//! stays at or below 1. With r = 1 (embed every frame) this reduces to
//! `fps <= 1 / embed_latency_s` for a pure embedding profile.

use serde::Serialize;

use crate::config::CostModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityRow {
    pub fps: f64,
    /// Fraction of a device-second consumed per stream-second.
    pub utilization: f64,
    /// Steady-state backlog growth in pending index frames per second
    /// (0 when the device keeps up).
    pub queue_growth_per_s: f64,
    pub sustainable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub sparsification_ratio: f64,
    pub rows: Vec<FeasibilityRow>,
    /// Highest sustainable fps; `None` means unbounded (zero per-frame cost).
    pub max_sustainable_fps: Option<f64>,
}

/// Evaluates feasibility over an fps sweep.
///
/// `sparsification_ratio` is stream frames per index frame; pass 1.0 for the
/// embed-every-frame mode.
pub fn check_realtime_feasibility(
    fps_values: &[f64],
    cost: &CostModel,
    sparsification_ratio: f64,
) -> Result<FeasibilityReport> {
    if !sparsification_ratio.is_finite() || sparsification_ratio < 1.0 {
        return Err(Error::Retrieval(format!(
            "sparsification ratio must be >= 1, got {sparsification_ratio}"
        )));
    }
    let per_index = cost.embed_latency_s + cost.aux_latency_s;
    let per_frame = cost.segment_cluster_latency_s;
    let rows = fps_values
        .iter()
        .map(|&fps| {
            let utilization = fps * per_frame + (fps / sparsification_ratio) * per_index;
            let production = fps / sparsification_ratio;
            let capacity = if per_index > 0.0 {
                ((1.0 - (fps * per_frame).min(1.0)) / per_index).max(0.0)
            } else {
                f64::INFINITY
            };
            FeasibilityRow {
                fps,
                utilization,
                queue_growth_per_s: (production - capacity).max(0.0),
                sustainable: utilization <= 1.0,
            }
        })
        .collect();
    let denominator = per_frame + per_index / sparsification_ratio;
    Ok(FeasibilityReport {
        sparsification_ratio,
        rows,
        max_sustainable_fps: if denominator > 0.0 {
            Some(1.0 / denominator)
        } else {
            None
        },
    })
}

/// Evenly spaced fps values over `lo..=hi`.
pub fn fps_sweep(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 || hi <= lo {
        return vec![lo];
    }
    (0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect()
}
