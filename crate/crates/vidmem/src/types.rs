//! Shared domain types flowing between pipeline stages.
//!
//! Everything here is plain data: immutable after construction and safe to
//! share across threads. Mutation happens only behind the memory store's
//! writer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single timestamped RGB frame, the unit flowing through ingestion.
///
/// `pixels` is a row-major, interleaved 8-bit RGB buffer of exactly
/// `width * height * 3` bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub frame_id: u64,
    /// Seconds from stream start. Non-decreasing along a stream.
    pub timestamp: f64,
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Frame {
    pub fn new(frame_id: u64, timestamp: f64, width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        let frame = Frame {
            frame_id,
            timestamp,
            width,
            height,
            pixels,
        };
        frame.validate()?;
        Ok(frame)
    }

    /// A uniformly colored frame; used by the synthetic source and tests.
    pub fn solid(frame_id: u64, timestamp: f64, width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..width as usize * height as usize {
            pixels.extend_from_slice(&rgb);
        }
        Frame {
            frame_id,
            timestamp,
            width,
            height,
            pixels,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let expected = self.width as usize * self.height as usize * 3;
        if self.pixels.len() != expected {
            return Err(Error::InvalidFrame {
                frame_id: self.frame_id,
                reason: format!(
                    "pixel buffer length {} != width*height*3 = {}",
                    self.pixels.len(),
                    expected
                ),
            });
        }
        if !self.timestamp.is_finite() || self.timestamp < 0.0 {
            return Err(Error::InvalidFrame {
                frame_id: self.frame_id,
                reason: format!("timestamp {} not finite and non-negative", self.timestamp),
            });
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// RGB triple at (x, y); panics when out of bounds.
    pub fn rgb(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

/// Per-channel mean absolute difference between two consecutive frames.
///
/// Each component is a dimensionless scalar in [0, 1]. The hue component uses
/// the circular metric, so its effective range is [0, 0.5].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelFeatures {
    pub hue_mean_diff: f64,
    pub sat_mean_diff: f64,
    pub light_mean_diff: f64,
    pub edge_mean_diff: f64,
}

impl ChannelFeatures {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("hue_mean_diff", self.hue_mean_diff),
            ("sat_mean_diff", self.sat_mean_diff),
            ("light_mean_diff", self.light_mean_diff),
            ("edge_mean_diff", self.edge_mean_diff),
        ] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::Retrieval(format!(
                    "channel feature {name} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// A contiguous temporal segment emitted by the scene segmenter.
///
/// Frames are contiguous in `frame_id`: partitions never overlap and never
/// skip a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePartition {
    pub partition_id: u64,
    pub frames: Vec<Frame>,
    /// Timestamp of the first frame.
    pub start_s: f64,
    /// Timestamp of the last frame.
    pub end_s: f64,
    pub closed: bool,
}

impl ScenePartition {
    pub fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::BadPartition {
                partition_id: self.partition_id,
                reason: "empty".into(),
            });
        }
        for pair in self.frames.windows(2) {
            if pair[1].frame_id != pair[0].frame_id + 1 {
                return Err(Error::BadPartition {
                    partition_id: self.partition_id,
                    reason: format!(
                        "frame ids not contiguous: {} then {}",
                        pair[0].frame_id, pair[1].frame_id
                    ),
                });
            }
        }
        if self.start_s != self.frames[0].timestamp
            || self.end_s != self.frames[self.frames.len() - 1].timestamp
        {
            return Err(Error::BadPartition {
                partition_id: self.partition_id,
                reason: "start/end timestamps disagree with member frames".into(),
            });
        }
        Ok(())
    }
}

/// How a cluster's centroid evolves as members join.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CentroidMode {
    /// Centroid is the arithmetic mean of all member vectors (recomputed in
    /// frame order on every join).
    #[default]
    RunningMean,
    /// Centroid stays pinned to the seeding frame's vector.
    FirstFrame,
}

/// A group of visually similar frames inside one scene partition.
///
/// `centroid` lives in flattened downscaled pixel space (see
/// [`crate::clusterer::flatten`]). `index_frame_id` is set at finalization and
/// always refers to one of `member_frame_ids`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub cluster_id: u64,
    pub partition_id: u64,
    /// Sorted by frame id (== insertion order).
    pub member_frame_ids: Vec<u64>,
    pub centroid: Vec<f64>,
    pub index_frame_id: Option<u64>,
}

impl Cluster {
    pub fn is_finalized(&self) -> bool {
        self.index_frame_id.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        if self.member_frame_ids.is_empty() {
            return Err(Error::Store(format!(
                "cluster {} has no members",
                self.cluster_id
            )));
        }
        if !self.member_frame_ids.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Store(format!(
                "cluster {} members not sorted by frame id",
                self.cluster_id
            )));
        }
        if let Some(idx) = self.index_frame_id {
            if !self.member_frame_ids.contains(&idx) {
                return Err(Error::Store(format!(
                    "cluster {} index frame {idx} is not a member",
                    self.cluster_id
                )));
            }
        }
        Ok(())
    }
}

/// Maximum allowed drift of a unit vector's cached norm from 1.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

/// A unit-normalized embedding, stored as 32-bit floats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f32>,
    /// Euclidean norm of `values`, cached after normalization; within
    /// [`UNIT_NORM_TOLERANCE`] of 1.
    norm: f64,
}

impl EmbeddingVector {
    /// Normalizes `values` (computed in f64, persisted as f32).
    ///
    /// Fails on an effectively-zero input vector.
    pub fn normalized(values: &[f64]) -> Result<Self> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::Embedding(
                "cannot normalize zero or non-finite vector".into(),
            ));
        }
        let values: Vec<f32> = values.iter().map(|v| (v / norm) as f32).collect();
        let stored_norm = values.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt();
        Ok(EmbeddingVector {
            values,
            norm: stored_norm,
        })
    }

    /// Wraps raw f32 values that are already unit length (e.g. read back from
    /// the vector file). Fails when the norm is off by more than
    /// [`UNIT_NORM_TOLERANCE`].
    pub fn from_unit_values(values: Vec<f32>) -> Result<Self> {
        let norm = values.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(Error::Embedding(format!(
                "vector norm {norm} not within {UNIT_NORM_TOLERANCE} of 1"
            )));
        }
        Ok(EmbeddingVector { values, norm })
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    /// Dot product accumulated in f64. Equals cosine similarity for unit
    /// vectors.
    pub fn dot(&self, other: &EmbeddingVector) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::EmbeddingDimension {
                expected: self.values.len(),
                got: other.values.len(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a as f64 * b as f64)
            .sum())
    }
}

/// The index-layer record: a cluster's representative frame, its auxiliary
/// prompt, and its embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedFrame {
    pub index_id: u64,
    /// Representative (index) frame of the owning cluster.
    pub frame_id: u64,
    pub cluster_id: u64,
    pub aux_prompt: String,
    pub embedding: EmbeddingVector,
}

/// Per-query cost components, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub on_device_s: f64,
    pub transmission_s: f64,
    pub cloud_s: f64,
    pub total_s: f64,
}

impl LatencyBreakdown {
    pub fn new(on_device_s: f64, transmission_s: f64, cloud_s: f64) -> Self {
        LatencyBreakdown {
            on_device_s,
            transmission_s,
            cloud_s,
            total_s: on_device_s + transmission_s + cloud_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.on_device_s, self.transmission_s, self.cloud_s];
        if parts.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::Retrieval(
                "latency components must be finite and non-negative".into(),
            ));
        }
        let sum = self.on_device_s + self.transmission_s + self.cloud_s;
        if (sum - self.total_s).abs() > 1e-9 {
            return Err(Error::Retrieval(format!(
                "latency total {} != component sum {}",
                self.total_s, sum
            )));
        }
        Ok(())
    }
}
