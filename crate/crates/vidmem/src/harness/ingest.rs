//! The ingestion pipeline: source -> segmenter -> clusterer -> aux+embed ->
//! memory insert, wired as four concurrent stages over bounded queues.
//! A full queue blocks the upstream stage (backpressure); queue depth highs
//! are recorded for the real-time feasibility check.

use std::path::Path;
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::mpsc::sync_channel;
use std::time::Instant;

use serde::Serialize;

use crate::clusterer::cluster_partition;
use crate::config::PipelineConfig;
use crate::embedding::{build_aux_prompt, Embedder};
use crate::error::{Error, Result};
use crate::segmenter::SceneSegmenter;
use crate::store::{InsertItem, MemoryStore};
use crate::types::{Cluster, Frame, IndexedFrame, ScenePartition};

use super::source::{open_stream, StreamSourceSpec};

/// Runtime observations (wall-clock and scheduling dependent), reported
/// separately so deterministic output comparisons can strip them.
#[derive(Debug, Clone, Serialize, Default)]
pub struct IngestionTimings {
    /// Busy seconds of source+segment, cluster, aux+embed, insert.
    pub stage_busy_s: [f64; 4],
    pub wall_s: f64,
    /// Highest observed depth of the three inter-stage queues.
    pub max_queue_depth: [u64; 3],
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestionReport {
    pub frames_ingested: u64,
    pub partitions_closed: u64,
    pub clusters_created: u64,
    pub indexed_frames: u64,
    /// Sum of cluster member counts; reconciles with `frames_ingested`.
    pub member_frames_total: u64,
    /// Stream frames per index frame (0 when nothing was indexed).
    pub sparsification_ratio: f64,
    pub memory_sequence: u64,
    pub timings: IngestionTimings,
}

#[derive(Default)]
struct Gauge {
    depth: AtomicI64,
    max: AtomicI64,
}

impl Gauge {
    fn on_send(&self) {
        let d = self.depth.fetch_add(1, Ordering::SeqCst) + 1;
        self.max.fetch_max(d, Ordering::SeqCst);
    }

    fn on_recv(&self) {
        self.depth.fetch_sub(1, Ordering::SeqCst);
    }

    fn high_water(&self) -> u64 {
        self.max.load(Ordering::SeqCst).max(0) as u64
    }
}

struct ClusterJob {
    cluster: Cluster,
    frames: Vec<Frame>,
}

fn closed_early(what: &str) -> Error {
    Error::Pipeline(format!("{what}: downstream stage closed early"))
}

/// Streams every source frame through segmentation, clustering, auxiliary
/// models, embedding, and memory insertion. The memory store is created at
/// `memory_root` (refusing to overwrite an existing one).
pub fn run_ingestion(
    source: &StreamSourceSpec,
    config: &PipelineConfig,
    memory_root: &Path,
) -> Result<IngestionReport> {
    let started = Instant::now();
    let store = MemoryStore::create(memory_root, config.embedding.dimension)?;
    let embedder = Embedder::from_config(&config.embedding)?;
    let aux = config.embedding.aux_models;
    let capacity = config.stream.queue_capacity;

    let (partition_tx, partition_rx) = sync_channel::<ScenePartition>(capacity);
    let (cluster_tx, cluster_rx) = sync_channel::<ClusterJob>(capacity);
    let (insert_tx, insert_rx) = sync_channel::<InsertItem>(capacity);
    let gauges = [Gauge::default(), Gauge::default(), Gauge::default()];

    let stream = open_stream(source, config.stream.fps)?;
    let segmenter_config = config.segmenter.clone();
    let clusterer_config = config.clusterer.clone();

    let (r_segment, r_cluster, r_embed, r_insert) = std::thread::scope(|scope| {
        let g = &gauges;
        let store_ref = &store;
        let embedder_ref = &embedder;

        let segment = scope.spawn(move || -> Result<(u64, u64, f64)> {
            let mut segmenter = SceneSegmenter::new(segmenter_config);
            let mut frames = 0u64;
            let mut partitions = 0u64;
            let mut busy = 0.0f64;
            let emit = |p: ScenePartition| -> Result<()> {
                partition_tx.send(p).map_err(|_| closed_early("segmenter"))?;
                g[0].on_send();
                Ok(())
            };
            for (position, frame) in stream.enumerate() {
                let t0 = Instant::now();
                let frame = frame.map_err(|e| {
                    Error::Pipeline(format!("reading source frame {position}: {e}"))
                })?;
                let frame_id = frame.frame_id;
                let closed = segmenter.ingest_frame(frame).map_err(|e| {
                    Error::Pipeline(format!("segmenting frame {frame_id}: {e}"))
                })?;
                frames += 1;
                busy += t0.elapsed().as_secs_f64();
                if let Some(p) = closed {
                    partitions += 1;
                    emit(p)?;
                }
            }
            if let Some(p) = segmenter.flush() {
                partitions += 1;
                emit(p)?;
            }
            Ok((frames, partitions, busy))
        });

        let cluster = scope.spawn(move || -> Result<(u64, f64)> {
            let mut next_cluster_id = 0u64;
            let mut clusters_created = 0u64;
            let mut busy = 0.0f64;
            while let Ok(partition) = partition_rx.recv() {
                g[0].on_recv();
                let t0 = Instant::now();
                let partition_id = partition.partition_id;
                let clusters = cluster_partition(&partition, &clusterer_config).map_err(|e| {
                    Error::Pipeline(format!("clustering partition {partition_id}: {e}"))
                })?;
                let mut frames_by_id: std::collections::BTreeMap<u64, Frame> = partition
                    .frames
                    .into_iter()
                    .map(|f| (f.frame_id, f))
                    .collect();
                let mut jobs = Vec::with_capacity(clusters.len());
                for mut cluster in clusters {
                    cluster.cluster_id = next_cluster_id;
                    next_cluster_id += 1;
                    clusters_created += 1;
                    let frames: Vec<Frame> = cluster
                        .member_frame_ids
                        .iter()
                        .map(|id| frames_by_id.remove(id).expect("member frame present"))
                        .collect();
                    jobs.push(ClusterJob { cluster, frames });
                }
                busy += t0.elapsed().as_secs_f64();
                for job in jobs {
                    cluster_tx.send(job).map_err(|_| closed_early("clusterer"))?;
                    g[1].on_send();
                }
            }
            Ok((clusters_created, busy))
        });

        let embed = scope.spawn(move || -> Result<(u64, f64)> {
            let mut next_index_id = 0u64;
            let mut indexed = 0u64;
            let mut busy = 0.0f64;
            while let Ok(job) = cluster_rx.recv() {
                g[1].on_recv();
                let t0 = Instant::now();
                let index_frame_id = job.cluster.index_frame_id.expect("finalized cluster");
                let index_frame = job
                    .frames
                    .iter()
                    .find(|f| f.frame_id == index_frame_id)
                    .expect("index frame is a member");
                let detections = aux.run(index_frame);
                let aux_prompt = build_aux_prompt(&detections);
                let embedding = embedder_ref.embed_image(index_frame, &aux_prompt).map_err(|e| {
                    Error::Pipeline(format!("embedding index frame {index_frame_id}: {e}"))
                })?;
                let record = IndexedFrame {
                    index_id: next_index_id,
                    frame_id: index_frame_id,
                    cluster_id: job.cluster.cluster_id,
                    aux_prompt,
                    embedding,
                };
                next_index_id += 1;
                indexed += 1;
                busy += t0.elapsed().as_secs_f64();
                insert_tx
                    .send(InsertItem {
                        record,
                        cluster: job.cluster,
                        frames: job.frames,
                    })
                    .map_err(|_| closed_early("embedder"))?;
                g[2].on_send();
            }
            Ok((indexed, busy))
        });

        let insert = scope.spawn(move || -> Result<(u64, u64, f64)> {
            let mut member_frames = 0u64;
            let mut sequence = 0u64;
            let mut busy = 0.0f64;
            while let Ok(item) = insert_rx.recv() {
                g[2].on_recv();
                let t0 = Instant::now();
                member_frames += item.frames.len() as u64;
                let index_id = item.record.index_id;
                sequence = store_ref
                    .insert_indexed_frame(item.record, item.cluster, item.frames)
                    .map_err(|e| Error::Pipeline(format!("inserting record {index_id}: {e}")))?;
                busy += t0.elapsed().as_secs_f64();
            }
            Ok((member_frames, sequence, busy))
        });

        (
            segment.join().expect("segment stage panicked"),
            cluster.join().expect("cluster stage panicked"),
            embed.join().expect("embed stage panicked"),
            insert.join().expect("insert stage panicked"),
        )
    });

    // A downstream failure surfaces upstream as a closed-channel send; report
    // the root cause, falling back to the send failure itself.
    fn split<T>(r: Result<T>) -> (Option<T>, Option<Error>) {
        match r {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e)),
        }
    }
    let (seg_out, seg_err) = split(r_segment);
    let (cluster_out, cluster_err) = split(r_cluster);
    let (embed_out, embed_err) = split(r_embed);
    let (insert_out, insert_err) = split(r_insert);
    let mut deferred: Option<Error> = None;
    for error in [insert_err, embed_err, cluster_err, seg_err].into_iter().flatten() {
        let is_closed = matches!(&error, Error::Pipeline(msg) if msg.contains("closed early"));
        if is_closed {
            deferred.get_or_insert(error);
        } else {
            return Err(error);
        }
    }
    if let Some(error) = deferred {
        return Err(error);
    }

    let (frames_ingested, partitions_closed, busy_segment) = seg_out.unwrap();
    let (clusters_created, busy_cluster) = cluster_out.unwrap();
    let (indexed_frames, busy_embed) = embed_out.unwrap();
    let (member_frames_total, memory_sequence, busy_insert) = insert_out.unwrap();

    Ok(IngestionReport {
        frames_ingested,
        partitions_closed,
        clusters_created,
        indexed_frames,
        member_frames_total,
        sparsification_ratio: if indexed_frames == 0 {
            0.0
        } else {
            frames_ingested as f64 / indexed_frames as f64
        },
        memory_sequence,
        timings: IngestionTimings {
            stage_busy_s: [busy_segment, busy_cluster, busy_embed, busy_insert],
            wall_s: started.elapsed().as_secs_f64(),
            max_queue_depth: [
                gauges[0].high_water(),
                gauges[1].high_water(),
                gauges[2].high_water(),
            ],
        },
    })
}
