//! Pipeline configuration: parsing, defaults, and validation.
//!
//! The configuration file is TOML with one section per stage. Every field is
//! optional in the file; [`validate_config`] fills documented defaults and
//! reports *every* violated invariant (with its field path) instead of
//! stopping at the first.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigViolation, Error, Result};
use crate::types::CentroidMode;

/// Channel weights of the scene tracking score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelWeights {
    pub hue: f64,
    pub saturation: f64,
    pub lightness: f64,
    pub edge: f64,
}

impl Default for ChannelWeights {
    fn default() -> Self {
        ChannelWeights {
            hue: 1.0,
            saturation: 1.0,
            lightness: 1.0,
            edge: 1.0,
        }
    }
}

impl ChannelWeights {
    pub fn new(hue: f64, saturation: f64, lightness: f64, edge: f64) -> Self {
        ChannelWeights {
            hue,
            saturation,
            lightness,
            edge,
        }
    }

    pub fn l1_norm(&self) -> f64 {
        self.hue + self.saturation + self.lightness + self.edge
    }

    fn components(&self) -> [(&'static str, f64); 4] {
        [
            ("hue", self.hue),
            ("saturation", self.saturation),
            ("lightness", self.lightness),
            ("edge", self.edge),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmenterConfig {
    pub weights: ChannelWeights,
    /// Boundary fires when the scene tracking score exceeds this.
    pub scene_threshold: f64,
    /// Forced temporal flush: no partition spans longer than this.
    pub max_partition_duration_s: f64,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig {
            weights: ChannelWeights::default(),
            scene_threshold: 0.15,
            max_partition_duration_s: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClustererConfig {
    /// L2 distance threshold in flattened downscaled pixel space. When absent
    /// it defaults to `0.08 * sqrt(downscale_edge^2 * 3)`, which keeps the
    /// per-component scale independent of the thumbnail size.
    pub distance_threshold: Option<f64>,
    /// Side length of the square thumbnail frames are flattened to.
    pub downscale_edge: u32,
    pub centroid_mode: CentroidMode,
}

impl Default for ClustererConfig {
    fn default() -> Self {
        ClustererConfig {
            distance_threshold: None,
            downscale_edge: 64,
            centroid_mode: CentroidMode::RunningMean,
        }
    }
}

impl ClustererConfig {
    /// The configured threshold, or the scale-aware default.
    pub fn resolved_threshold(&self) -> f64 {
        self.distance_threshold.unwrap_or_else(|| {
            let len = self.downscale_edge as f64 * self.downscale_edge as f64 * 3.0;
            0.08 * len.sqrt()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EmbedBackendKind {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub backend: EmbedBackendKind,
    /// Embedding dimension D.
    pub dimension: usize,
    /// Base URL of the embedding service (http backend only).
    pub endpoint: Option<String>,
    pub timeout_s: f64,
    pub retries: u32,
    /// Concurrent-request bound of the http backend.
    pub max_in_flight: usize,
    /// Auxiliary detectors run on index frames before embedding.
    pub aux_models: crate::embedding::AuxModels,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            backend: EmbedBackendKind::Mock,
            dimension: 256,
            endpoint: None,
            timeout_s: 10.0,
            retries: 2,
            max_in_flight: 4,
            aux_models: crate::embedding::AuxModels::Stub,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    /// Softmax temperature.
    pub temperature: f64,
    /// Cumulative-probability termination threshold of adaptive retrieval.
    pub theta: f64,
    /// Lower-bound scale of adaptive retrieval.
    pub beta: f64,
    /// Hard ceiling on sample draws.
    pub n_max: usize,
    /// Fixed sampling budget; setting this disables adaptive retrieval.
    pub n_fixed: Option<usize>,
    /// Seed of the sampling RNG.
    pub seed: u64,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            temperature: 1.0,
            theta: 0.9,
            beta: 1.0,
            n_max: 32,
            n_fixed: None,
            seed: 0,
        }
    }
}

/// Analytic cost model of the edge-cloud deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    pub bandwidth_bps: f64,
    /// Seconds per embedding on the device profile.
    pub embed_latency_s: f64,
    /// Seconds of auxiliary-model work per index frame.
    pub aux_latency_s: f64,
    /// Per-frame segmentation + clustering cost.
    pub segment_cluster_latency_s: f64,
    /// Cloud inference is modeled as `cloud_base_s + cloud_per_frame_s * frames`.
    pub cloud_base_s: f64,
    pub cloud_per_frame_s: f64,
    /// Average encoded keyframe size in bytes.
    pub frame_bytes: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            bandwidth_bps: 100_000_000.0,
            embed_latency_s: 1.0 / 1.8,
            aux_latency_s: 0.01,
            segment_cluster_latency_s: 0.001,
            cloud_base_s: 0.5,
            cloud_per_frame_s: 0.05,
            frame_bytes: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StreamConfig {
    /// Frame rate applied to directory sources (and synthetic specs that omit
    /// their own).
    pub fps: f64,
    /// Capacity of the bounded queues between pipeline stages.
    pub queue_capacity: usize,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            fps: 8.0,
            queue_capacity: 64,
        }
    }
}

/// The full validated pipeline configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PipelineConfig {
    pub segmenter: SegmenterConfig,
    pub clusterer: ClustererConfig,
    pub embedding: EmbeddingConfig,
    pub retrieval: RetrievalConfig,
    pub simulator: CostModel,
    pub stream: StreamConfig,
}

impl PipelineConfig {
    /// Parses TOML, fills defaults, validates. See [`validate_config`].
    pub fn from_toml_str(text: &str) -> Result<(PipelineConfig, Vec<String>)> {
        let raw: PipelineConfig = toml::from_str(text).map_err(|e| {
            Error::Config(vec![ConfigViolation {
                path: "<file>".into(),
                message: e.to_string(),
            }])
        })?;
        validate_config(raw)
    }

    pub fn from_toml_file(path: &std::path::Path) -> Result<(PipelineConfig, Vec<String>)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

/// Checks every invariant of the full configuration, reporting all violations
/// at once. On success returns the normalized configuration plus non-fatal
/// warnings (e.g. the `beta != 1` ambiguity flag).
pub fn validate_config(config: PipelineConfig) -> Result<(PipelineConfig, Vec<String>)> {
    let mut violations = Vec::new();
    let mut warnings = Vec::new();

    let seg = &config.segmenter;
    for (name, w) in seg.weights.components() {
        if !w.is_finite() || w < 0.0 {
            violations.push(ConfigViolation {
                path: format!("segmenter.weights.{name}"),
                message: format!("weight must be finite and non-negative, got {w}"),
            });
        }
    }
    if seg.weights.components().iter().all(|&(_, w)| w == 0.0) {
        violations.push(ConfigViolation {
            path: "segmenter.weights".into(),
            message: "weight vector (hue, saturation, lightness, edge) must have at least one \
                      strictly positive component"
                .into(),
        });
    }
    if !seg.scene_threshold.is_finite() || seg.scene_threshold <= 0.0 || seg.scene_threshold > 1.0 {
        violations.push(ConfigViolation {
            path: "segmenter.scene_threshold".into(),
            message: format!("must be in (0, 1], got {}", seg.scene_threshold),
        });
    }
    if !seg.max_partition_duration_s.is_finite() || seg.max_partition_duration_s <= 0.0 {
        violations.push(ConfigViolation {
            path: "segmenter.max_partition_duration_s".into(),
            message: format!("must be positive, got {}", seg.max_partition_duration_s),
        });
    }

    let clu = &config.clusterer;
    if clu.downscale_edge < 1 {
        violations.push(ConfigViolation {
            path: "clusterer.downscale_edge".into(),
            message: "must be at least 1".into(),
        });
    }
    if let Some(t) = clu.distance_threshold {
        if !t.is_finite() || t <= 0.0 {
            violations.push(ConfigViolation {
                path: "clusterer.distance_threshold".into(),
                message: format!("must be positive, got {t}"),
            });
        }
    }

    let emb = &config.embedding;
    if emb.dimension < 8 {
        violations.push(ConfigViolation {
            path: "embedding.dimension".into(),
            message: format!("must be at least 8, got {}", emb.dimension),
        });
    }
    if emb.backend == EmbedBackendKind::Http && emb.endpoint.is_none() {
        violations.push(ConfigViolation {
            path: "embedding.endpoint".into(),
            message: "required for the http backend".into(),
        });
    }
    if !emb.timeout_s.is_finite() || emb.timeout_s <= 0.0 {
        violations.push(ConfigViolation {
            path: "embedding.timeout_s".into(),
            message: format!("must be positive, got {}", emb.timeout_s),
        });
    }
    if emb.max_in_flight < 1 {
        violations.push(ConfigViolation {
            path: "embedding.max_in_flight".into(),
            message: "must be at least 1".into(),
        });
    }

    let ret = &config.retrieval;
    if !ret.temperature.is_finite() || ret.temperature <= 0.0 {
        violations.push(ConfigViolation {
            path: "retrieval.temperature".into(),
            message: format!("temperature must be positive, got {}", ret.temperature),
        });
    }
    if !ret.theta.is_finite() || ret.theta <= 0.0 || ret.theta > 1.0 {
        violations.push(ConfigViolation {
            path: "retrieval.theta".into(),
            message: format!("must be in (0, 1], got {}", ret.theta),
        });
    }
    if !ret.beta.is_finite() || ret.beta <= 0.0 {
        violations.push(ConfigViolation {
            path: "retrieval.beta".into(),
            message: format!("must be positive, got {}", ret.beta),
        });
    } else if ret.beta != 1.0 {
        warnings.push(format!(
            "retrieval.beta = {}: with beta != 1 the adaptive termination test divides the \
             cumulative probability by beta while the draw lower bound multiplies by it; \
             thresholds near 1 can become unsatisfiable and every query then exhausts n_max",
            ret.beta
        ));
    }
    if ret.n_max < 1 {
        violations.push(ConfigViolation {
            path: "retrieval.n_max".into(),
            message: "must be at least 1".into(),
        });
    }
    if let Some(n) = ret.n_fixed {
        if n < 1 {
            violations.push(ConfigViolation {
                path: "retrieval.n_fixed".into(),
                message: "must be at least 1 when set".into(),
            });
        }
    }

    let sim = &config.simulator;
    if !sim.bandwidth_bps.is_finite() || sim.bandwidth_bps <= 0.0 {
        violations.push(ConfigViolation {
            path: "simulator.bandwidth_bps".into(),
            message: format!("must be positive, got {}", sim.bandwidth_bps),
        });
    }
    for (name, v) in [
        ("embed_latency_s", sim.embed_latency_s),
        ("aux_latency_s", sim.aux_latency_s),
        ("segment_cluster_latency_s", sim.segment_cluster_latency_s),
        ("cloud_base_s", sim.cloud_base_s),
        ("cloud_per_frame_s", sim.cloud_per_frame_s),
    ] {
        if !v.is_finite() || v < 0.0 {
            violations.push(ConfigViolation {
                path: format!("simulator.{name}"),
                message: format!("must be finite and non-negative, got {v}"),
            });
        }
    }

    let stream = &config.stream;
    if !stream.fps.is_finite() || stream.fps <= 0.0 {
        violations.push(ConfigViolation {
            path: "stream.fps".into(),
            message: format!("must be positive, got {}", stream.fps),
        });
    }
    if stream.queue_capacity < 1 {
        violations.push(ConfigViolation {
            path: "stream.queue_capacity".into(),
            message: "must be at least 1".into(),
        });
    }

    if violations.is_empty() {
        Ok((config, warnings))
    } else {
        Err(Error::Config(violations))
    }
}
