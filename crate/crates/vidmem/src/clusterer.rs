//! Incremental frame clustering within a closed scene partition.
//!
//! Frames are flattened to a downscaled pixel vector; each frame joins the
//! nearest existing cluster when the L2 distance to its centroid is within
//! the threshold, otherwise it seeds a new cluster. The documented arithmetic
//! is deliberately rigid (sums in frame order, mean recomputed over members)
//! so an independent replay of the rule reproduces the structure exactly.

use crate::config::ClustererConfig;
use crate::error::{Error, Result};
use crate::types::{CentroidMode, Cluster, Frame, ScenePartition};

/// Area-average downscale of a frame to `downscale_edge` x `downscale_edge`,
/// channels scaled to [0, 1], row-major flattened with interleaved RGB.
///
/// Each target cell averages the source pixels it covers, weighted by exact
/// fractional overlap, so the result is resolution independent and also
/// well-defined when the target is larger than the source.
pub fn flatten(frame: &Frame, downscale_edge: u32) -> Result<Vec<f64>> {
    frame.validate()?;
    if frame.width == 0 || frame.height == 0 {
        return Err(Error::InvalidFrame {
            frame_id: frame.frame_id,
            reason: "zero-area frame".into(),
        });
    }
    if downscale_edge == 0 {
        return Err(Error::InvalidFrame {
            frame_id: frame.frame_id,
            reason: "downscale_edge must be at least 1".into(),
        });
    }
    let e = downscale_edge as usize;
    let (w, h) = (frame.width as usize, frame.height as usize);
    let sx = w as f64 / e as f64;
    let sy = h as f64 / e as f64;
    let mut out = vec![0.0f64; e * e * 3];
    for ty in 0..e {
        let y0 = ty as f64 * sy;
        let y1 = (ty + 1) as f64 * sy;
        for tx in 0..e {
            let x0 = tx as f64 * sx;
            let x1 = (tx + 1) as f64 * sx;
            let mut acc = [0.0f64; 3];
            let mut area = 0.0f64;
            let mut py = y0.floor() as usize;
            while (py as f64) < y1 && py < h {
                let wy = (y1.min((py + 1) as f64) - y0.max(py as f64)).max(0.0);
                if wy > 0.0 {
                    let mut px = x0.floor() as usize;
                    while (px as f64) < x1 && px < w {
                        let wx = (x1.min((px + 1) as f64) - x0.max(px as f64)).max(0.0);
                        if wx > 0.0 {
                            let weight = wx * wy;
                            let i = (py * w + px) * 3;
                            acc[0] += weight * frame.pixels[i] as f64;
                            acc[1] += weight * frame.pixels[i + 1] as f64;
                            acc[2] += weight * frame.pixels[i + 2] as f64;
                            area += weight;
                        }
                        px += 1;
                    }
                }
                py += 1;
            }
            let base = (ty * e + tx) * 3;
            for c in 0..3 {
                out[base + c] = acc[c] / (area * 255.0);
            }
        }
    }
    Ok(out)
}

/// L2 distance, summed in element order.
fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Mean of member vectors, summed in member (frame) order.
fn mean_vector(members: &[Vec<f64>]) -> Vec<f64> {
    let dim = members[0].len();
    let mut mean = vec![0.0f64; dim];
    for m in members {
        for (acc, v) in mean.iter_mut().zip(m) {
            *acc += v;
        }
    }
    let n = members.len() as f64;
    for acc in &mut mean {
        *acc /= n;
    }
    mean
}

struct ClusterBuilder {
    member_frame_ids: Vec<u64>,
    member_vectors: Vec<Vec<f64>>,
    centroid: Vec<f64>,
}

/// Clusters a closed, non-empty partition.
///
/// Assignment rule, applied in frame order: the first frame seeds cluster 0;
/// each later frame joins the nearest existing centroid when the L2 distance
/// is `<= threshold` (ties broken by lowest cluster id), otherwise it seeds a
/// new cluster. In `RunningMean` mode a join recomputes the centroid as the
/// mean of all member vectors. After assignment, each cluster's index frame
/// is the member nearest the final centroid (ties -> earliest frame id).
///
/// Cluster ids are local to the partition (0, 1, ... in creation order);
/// callers that merge partitions renumber them.
pub fn cluster_partition(partition: &ScenePartition, config: &ClustererConfig) -> Result<Vec<Cluster>> {
    if !partition.closed {
        return Err(Error::BadPartition {
            partition_id: partition.partition_id,
            reason: "not closed".into(),
        });
    }
    if partition.frames.is_empty() {
        return Err(Error::BadPartition {
            partition_id: partition.partition_id,
            reason: "empty".into(),
        });
    }
    let threshold = config.resolved_threshold();
    let mut builders: Vec<ClusterBuilder> = Vec::new();

    for frame in &partition.frames {
        let vector = flatten(frame, config.downscale_edge)?;
        let nearest = builders
            .iter()
            .enumerate()
            .map(|(id, c)| (id, l2_distance(&vector, &c.centroid)))
            .fold(None::<(usize, f64)>, |best, (id, d)| match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((id, d)),
            });
        match nearest {
            Some((id, d)) if d <= threshold => {
                let c = &mut builders[id];
                c.member_frame_ids.push(frame.frame_id);
                c.member_vectors.push(vector);
                if config.centroid_mode == CentroidMode::RunningMean {
                    c.centroid = mean_vector(&c.member_vectors);
                }
            }
            _ => builders.push(ClusterBuilder {
                member_frame_ids: vec![frame.frame_id],
                centroid: vector.clone(),
                member_vectors: vec![vector],
            }),
        }
    }

    let clusters = builders
        .into_iter()
        .enumerate()
        .map(|(id, b)| {
            let mut best: Option<(u64, f64)> = None;
            for (frame_id, vector) in b.member_frame_ids.iter().zip(&b.member_vectors) {
                let d = l2_distance(vector, &b.centroid);
                if best.is_none() || d < best.unwrap().1 {
                    best = Some((*frame_id, d));
                }
            }
            Cluster {
                cluster_id: id as u64,
                partition_id: partition.partition_id,
                member_frame_ids: b.member_frame_ids,
                centroid: b.centroid,
                index_frame_id: Some(best.unwrap().0),
            }
        })
        .collect();
    Ok(clusters)
}
