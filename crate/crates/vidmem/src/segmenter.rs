//! Online scene segmentation.
//!
//! Consecutive frames are compared with a scene tracking score: the weighted
//! mean of per-channel (hue, saturation, lightness, edge) mean absolute pixel
//! differences. A boundary closes the open partition when the score exceeds
//! the configured threshold; a forced temporal flush closes it when the next
//! frame would stretch the partition past `max_partition_duration_s`, so
//! fixed-view streams with no scene change still partition.

use crate::config::{ChannelWeights, SegmenterConfig};
use crate::error::{Error, Result};
use crate::types::{ChannelFeatures, Frame, ScenePartition};

/// Per-pixel channel maps of one frame, each value in [0, 1].
///
/// Hue is in turns (fraction of a full circle); achromatic pixels get hue 0.
/// The edge map is the 3x3 Sobel gradient magnitude of the lightness channel
/// with clamp-to-edge borders, normalized by `4 * sqrt(2)` (the per-axis
/// maximum response is 4).
#[derive(Debug, Clone)]
pub struct ChannelMaps {
    pub width: u32,
    pub height: u32,
    pub hue: Vec<f64>,
    pub saturation: Vec<f64>,
    pub lightness: Vec<f64>,
    pub edge: Vec<f64>,
}

/// Normalizer of the Sobel magnitude map.
pub const SOBEL_NORMALIZER: f64 = 5.656854249492381; // 4 * sqrt(2)

/// Converts one RGB triple (0-255) to (hue, saturation, lightness), each in
/// [0, 1].
pub fn rgb_to_hsl(rgb: [u8; 3]) -> (f64, f64, f64) {
    let r = rgb[0] as f64 / 255.0;
    let g = rgb[1] as f64 / 255.0;
    let b = rgb[2] as f64 / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let chroma = max - min;
    let lightness = (max + min) / 2.0;
    if chroma == 0.0 {
        return (0.0, 0.0, lightness);
    }
    let saturation = chroma / (1.0 - (2.0 * lightness - 1.0).abs());
    let hue_sextant = if max == r {
        ((g - b) / chroma).rem_euclid(6.0)
    } else if max == g {
        (b - r) / chroma + 2.0
    } else {
        (r - g) / chroma + 4.0
    };
    (hue_sextant / 6.0, saturation, lightness)
}

/// Circular hue distance in turns: `d(0.99, 0.01) = 0.02`. Range [0, 0.5].
pub fn hue_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

/// Computes the hue, saturation, lightness, and edge maps of a frame.
pub fn extract_channels(frame: &Frame) -> Result<ChannelMaps> {
    frame.validate()?;
    if frame.width == 0 || frame.height == 0 {
        return Err(Error::InvalidFrame {
            frame_id: frame.frame_id,
            reason: "zero-area frame".into(),
        });
    }
    let n = frame.pixel_count();
    let mut hue = Vec::with_capacity(n);
    let mut saturation = Vec::with_capacity(n);
    let mut lightness = Vec::with_capacity(n);
    for i in 0..n {
        let rgb = [
            frame.pixels[i * 3],
            frame.pixels[i * 3 + 1],
            frame.pixels[i * 3 + 2],
        ];
        let (h, s, l) = rgb_to_hsl(rgb);
        hue.push(h);
        saturation.push(s);
        lightness.push(l);
    }
    let edge = sobel_magnitude(&lightness, frame.width, frame.height);
    Ok(ChannelMaps {
        width: frame.width,
        height: frame.height,
        hue,
        saturation,
        lightness,
        edge,
    })
}

/// 3x3 Sobel gradient magnitude with clamp-to-edge borders, normalized to
/// [0, 1] by [`SOBEL_NORMALIZER`].
fn sobel_magnitude(lightness: &[f64], width: u32, height: u32) -> Vec<f64> {
    let w = width as i64;
    let h = height as i64;
    let at = |x: i64, y: i64| -> f64 {
        let x = x.clamp(0, w - 1);
        let y = y.clamp(0, h - 1);
        lightness[(y * w + x) as usize]
    };
    let mut out = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let gx = at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1)
                - at(x - 1, y - 1)
                - 2.0 * at(x - 1, y)
                - at(x - 1, y + 1);
            let gy = at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1)
                - at(x - 1, y - 1)
                - 2.0 * at(x, y - 1)
                - at(x + 1, y - 1);
            out.push((gx * gx + gy * gy).sqrt() / SOBEL_NORMALIZER);
        }
    }
    out
}

/// The scene tracking score between two frames' channel maps:
/// `phi = sum_c w_c * meanAbsDiff_c / sum_c w_c` over c in
/// {hue, saturation, lightness, edge}, with the hue differences taken on the
/// circle. Returns the score and the per-channel means.
pub fn scene_score(
    curr: &ChannelMaps,
    prev: &ChannelMaps,
    weights: &ChannelWeights,
) -> Result<(f64, ChannelFeatures)> {
    if curr.width != prev.width || curr.height != prev.height {
        return Err(Error::DimensionMismatch {
            left_w: curr.width,
            left_h: curr.height,
            right_w: prev.width,
            right_h: prev.height,
        });
    }
    let w_sum = weights.l1_norm();
    if w_sum.is_nan() || w_sum <= 0.0 {
        return Err(Error::Config(vec![crate::error::ConfigViolation {
            path: "segmenter.weights".into(),
            message: "L1 norm of the weight vector must be positive".into(),
        }]));
    }
    let n = curr.hue.len() as f64;
    let mean = |a: &[f64], b: &[f64], circular: bool| -> f64 {
        let sum: f64 = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| if circular { hue_distance(x, y) } else { (x - y).abs() })
            .sum();
        sum / n
    };
    let features = ChannelFeatures {
        hue_mean_diff: mean(&curr.hue, &prev.hue, true),
        sat_mean_diff: mean(&curr.saturation, &prev.saturation, false),
        light_mean_diff: mean(&curr.lightness, &prev.lightness, false),
        edge_mean_diff: mean(&curr.edge, &prev.edge, false),
    };
    let phi = (weights.hue * features.hue_mean_diff
        + weights.saturation * features.sat_mean_diff
        + weights.lightness * features.light_mean_diff
        + weights.edge * features.edge_mean_diff)
        / w_sum;
    Ok((phi, features))
}

struct OpenPartition {
    partition_id: u64,
    frames: Vec<Frame>,
    start_s: f64,
}

impl OpenPartition {
    fn close(self) -> ScenePartition {
        let end_s = self.frames.last().map(|f| f.timestamp).unwrap_or(self.start_s);
        ScenePartition {
            partition_id: self.partition_id,
            frames: self.frames,
            start_s: self.start_s,
            end_s,
            closed: true,
        }
    }
}

/// Streaming segmenter state. Single-threaded; one instance per stream.
pub struct SceneSegmenter {
    config: SegmenterConfig,
    previous_maps: Option<ChannelMaps>,
    open: Option<OpenPartition>,
    next_partition_id: u64,
    last_frame_id: Option<u64>,
    last_boundary_s: f64,
    last_score: Option<f64>,
}

impl SceneSegmenter {
    pub fn new(config: SegmenterConfig) -> Self {
        SceneSegmenter {
            config,
            previous_maps: None,
            open: None,
            next_partition_id: 0,
            last_frame_id: None,
            last_boundary_s: 0.0,
            last_score: None,
        }
    }

    /// Score of the most recent frame against its predecessor, if any.
    pub fn last_score(&self) -> Option<f64> {
        self.last_score
    }

    /// Timestamp at which the most recent partition closed.
    pub fn last_boundary_s(&self) -> f64 {
        self.last_boundary_s
    }

    /// Feeds one frame. Returns the partition closed by this frame, if any.
    ///
    /// Two close conditions:
    /// - boundary: the score against the previous frame exceeds
    ///   `scene_threshold`; the triggering frame starts the new partition;
    /// - forced flush: appending the frame would make the partition span
    ///   `max_partition_duration_s` or more, so the open partition closes and
    ///   the frame starts the new one. All frames inside one flush window stay
    ///   in a single partition.
    pub fn ingest_frame(&mut self, frame: Frame) -> Result<Option<ScenePartition>> {
        frame.validate()?;
        if let Some(last) = self.last_frame_id {
            if frame.frame_id <= last {
                return Err(Error::OutOfOrderFrame {
                    got: frame.frame_id,
                    last,
                });
            }
        }
        let maps = extract_channels(&frame)?;
        let score = match &self.previous_maps {
            Some(prev) => Some(scene_score(&maps, prev, &self.config.weights)?.0),
            None => None,
        };
        self.last_score = score;

        let mut closed = None;
        if let Some(open) = self.open.take() {
            let flush_due = frame.timestamp - open.start_s >= self.config.max_partition_duration_s;
            let boundary = score.is_some_and(|phi| phi > self.config.scene_threshold);
            if flush_due || boundary {
                self.last_boundary_s = frame.timestamp;
                closed = Some(open.close());
            } else {
                self.open = Some(open);
            }
        }

        match &mut self.open {
            Some(open) => open.frames.push(frame),
            None => {
                let id = self.next_partition_id;
                self.next_partition_id += 1;
                self.open = Some(OpenPartition {
                    partition_id: id,
                    start_s: frame.timestamp,
                    frames: vec![frame],
                });
            }
        }
        self.last_frame_id = Some(self.open.as_ref().unwrap().frames.last().unwrap().frame_id);
        self.previous_maps = Some(maps);
        Ok(closed)
    }

    /// Closes and returns the open partition, if any. Idempotent.
    pub fn flush(&mut self) -> Option<ScenePartition> {
        self.open.take().map(|open| {
            self.last_boundary_s = open.frames.last().map(|f| f.timestamp).unwrap_or(open.start_s);
            open.close()
        })
    }
}
