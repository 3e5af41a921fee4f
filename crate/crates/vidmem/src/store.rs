//! Hierarchical memory: a raw data layer (lossless per-frame PNG archive,
//! grouped by cluster) and an index data layer (flat cosine index over
//! indexed-frame embeddings), linked cluster <-> index record.
//!
//! On-disk layout under the store root:
//!
//! ```text
//! manifest.json   UTF-8 JSON, schema = MemoryManifest, version 1
//! vectors.f32     packed little-endian f32; record i at byte offset i*D*4
//! frames/<id>.png one lossless image per ingested frame
//! ```
//!
//! The manifest is rewritten via write-temp-then-rename, so a crash leaves
//! either both layers visible or neither: a torn vectors.f32 tail beyond
//! `manifest.index_count` is ignored on open. One writer at a time; readers
//! work on immutable snapshots that never block the writer.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio;
use crate::types::{Cluster, EmbeddingVector, Frame, IndexedFrame};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const VECTOR_FILE: &str = "vectors.f32";
pub const FRAME_DIR: &str = "frames";

/// Index-layer record metadata, without the vector payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub index_id: u64,
    pub frame_id: u64,
    pub cluster_id: u64,
    pub aux_prompt: String,
}

/// Raw-layer frame metadata; pixels live in `frames/<frame_id>.png`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub frame_id: u64,
    pub timestamp: f64,
    pub width: u32,
    pub height: u32,
}

/// Cluster metadata kept in the manifest (the clustering centroid is not
/// persisted; it has no post-finalization use).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMeta {
    pub cluster_id: u64,
    pub partition_id: u64,
    pub index_frame_id: u64,
    pub members: Vec<FrameMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryManifest {
    pub version: u32,
    pub dimension: usize,
    pub index_count: usize,
    pub cluster_count: usize,
    pub frame_count: usize,
    /// Strictly increasing per committed insertion batch.
    pub sequence: u64,
    pub vector_file: String,
    pub records: Vec<RecordMeta>,
    pub clusters: Vec<ClusterMeta>,
}

impl MemoryManifest {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let manifest: MemoryManifest = serde_json::from_slice(bytes)?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn to_json_pretty(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("manifest serialization");
        out.push('\n');
        out
    }

    /// Structural invariants: counts reconcile, ids are unique, and index
    /// records and finalized clusters form a bijection.
    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::Store(format!(
                "unsupported manifest version {} (expected {MANIFEST_VERSION})",
                self.version
            )));
        }
        if self.records.len() != self.index_count {
            return Err(Error::Store(format!(
                "index_count {} != records length {}",
                self.index_count,
                self.records.len()
            )));
        }
        if self.clusters.len() != self.cluster_count {
            return Err(Error::Store(format!(
                "cluster_count {} != clusters length {}",
                self.cluster_count,
                self.clusters.len()
            )));
        }
        // The vector file must sit inside the store root.
        if self.vector_file.is_empty()
            || self.vector_file.contains(['/', '\\'])
            || self.vector_file == "."
            || self.vector_file == ".."
        {
            return Err(Error::Store(format!(
                "vector_file {:?} must be a plain file name",
                self.vector_file
            )));
        }
        let frame_total: usize = self.clusters.iter().map(|c| c.members.len()).sum();
        if frame_total != self.frame_count {
            return Err(Error::Store(format!(
                "frame_count {} != total cluster members {}",
                self.frame_count, frame_total
            )));
        }

        let mut cluster_ids = BTreeSet::new();
        let mut frame_ids = BTreeSet::new();
        for cluster in &self.clusters {
            if !cluster_ids.insert(cluster.cluster_id) {
                return Err(Error::Store(format!(
                    "duplicate cluster id {}",
                    cluster.cluster_id
                )));
            }
            if cluster.members.is_empty() {
                return Err(Error::Store(format!(
                    "cluster {} has no members",
                    cluster.cluster_id
                )));
            }
            if !cluster.members.windows(2).all(|w| w[0].frame_id < w[1].frame_id) {
                return Err(Error::Store(format!(
                    "cluster {} members not sorted by frame id",
                    cluster.cluster_id
                )));
            }
            for m in &cluster.members {
                if !frame_ids.insert(m.frame_id) {
                    return Err(Error::Store(format!("duplicate frame id {}", m.frame_id)));
                }
                if !m.timestamp.is_finite() {
                    return Err(Error::Store(format!(
                        "frame {} timestamp {} is not finite",
                        m.frame_id, m.timestamp
                    )));
                }
            }
            if !cluster.members.iter().any(|m| m.frame_id == cluster.index_frame_id) {
                return Err(Error::Store(format!(
                    "cluster {} index frame {} is not a member",
                    cluster.cluster_id, cluster.index_frame_id
                )));
            }
        }

        let mut index_ids = BTreeSet::new();
        let mut linked_clusters = BTreeSet::new();
        for record in &self.records {
            if !index_ids.insert(record.index_id) {
                return Err(Error::DuplicateIndexId(record.index_id));
            }
            if !cluster_ids.contains(&record.cluster_id) {
                return Err(Error::UnknownCluster(record.cluster_id));
            }
            if !linked_clusters.insert(record.cluster_id) {
                return Err(Error::Store(format!(
                    "cluster {} linked by more than one index record",
                    record.cluster_id
                )));
            }
            let cluster = self
                .clusters
                .iter()
                .find(|c| c.cluster_id == record.cluster_id)
                .expect("checked above");
            if cluster.index_frame_id != record.frame_id {
                return Err(Error::Store(format!(
                    "record {} frame {} disagrees with cluster {} index frame {}",
                    record.index_id, record.frame_id, cluster.cluster_id, cluster.index_frame_id
                )));
            }
        }
        // Bijection: every cluster carries exactly one index record.
        if linked_clusters.len() != cluster_ids.len() {
            return Err(Error::Store(
                "some finalized clusters have no index record".into(),
            ));
        }
        Ok(())
    }
}

/// Immutable committed state shared between the writer and snapshots.
struct StoreState {
    dimension: usize,
    sequence: u64,
    /// Insertion order == vector-file record order.
    records: Vec<Arc<IndexedFrame>>,
    clusters: BTreeMap<u64, Arc<ClusterMeta>>,
    frames: BTreeMap<u64, FrameMeta>,
}

impl StoreState {
    fn manifest(&self) -> MemoryManifest {
        MemoryManifest {
            version: MANIFEST_VERSION,
            dimension: self.dimension,
            index_count: self.records.len(),
            cluster_count: self.clusters.len(),
            frame_count: self.frames.len(),
            sequence: self.sequence,
            vector_file: VECTOR_FILE.to_string(),
            records: self
                .records
                .iter()
                .map(|r| RecordMeta {
                    index_id: r.index_id,
                    frame_id: r.frame_id,
                    cluster_id: r.cluster_id,
                    aux_prompt: r.aux_prompt.clone(),
                })
                .collect(),
            clusters: self.clusters.values().map(|c| (**c).clone()).collect(),
        }
    }
}

/// One unit of insertion: the index record, its finalized cluster, and the
/// cluster's member frames for the raw layer.
#[derive(Debug, Clone)]
pub struct InsertItem {
    pub record: IndexedFrame,
    pub cluster: Cluster,
    pub frames: Vec<Frame>,
}

/// The hierarchical memory store. Single writer, many snapshot readers.
pub struct MemoryStore {
    root: PathBuf,
    state: RwLock<Arc<StoreState>>,
    writer: Mutex<()>,
}

impl MemoryStore {
    /// Initializes an empty store at `root`. Refuses to overwrite an existing
    /// manifest.
    pub fn create(root: &Path, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Store("dimension must be positive".into()));
        }
        let manifest_path = root.join(MANIFEST_FILE);
        if manifest_path.exists() {
            return Err(Error::Store(format!(
                "refusing to overwrite existing store at {}",
                root.display()
            )));
        }
        fs::create_dir_all(root.join(FRAME_DIR)).map_err(|e| Error::io(root, e))?;
        let state = StoreState {
            dimension,
            sequence: 0,
            records: Vec::new(),
            clusters: BTreeMap::new(),
            frames: BTreeMap::new(),
        };
        fs::write(root.join(VECTOR_FILE), b"").map_err(|e| Error::io(root.join(VECTOR_FILE), e))?;
        write_manifest_atomically(root, &state.manifest())?;
        Ok(MemoryStore {
            root: root.to_path_buf(),
            state: RwLock::new(Arc::new(state)),
            writer: Mutex::new(()),
        })
    }

    /// Opens an existing store, validating the manifest and loading exactly
    /// `index_count` vector records (any torn tail beyond them is ignored).
    pub fn open(root: &Path) -> Result<Self> {
        let manifest_path = root.join(MANIFEST_FILE);
        let bytes = fs::read(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest = MemoryManifest::from_json(&bytes)?;

        let vector_path = root.join(&manifest.vector_file);
        let vector_bytes = fs::read(&vector_path).map_err(|e| Error::io(&vector_path, e))?;
        let needed = manifest
            .index_count
            .checked_mul(manifest.dimension)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::Store("manifest record sizes overflow".into()))?;
        if vector_bytes.len() < needed {
            return Err(Error::Store(format!(
                "vector file holds {} bytes but manifest needs {needed}",
                vector_bytes.len()
            )));
        }

        let clusters: BTreeMap<u64, Arc<ClusterMeta>> = manifest
            .clusters
            .iter()
            .map(|c| (c.cluster_id, Arc::new(c.clone())))
            .collect();
        let frames: BTreeMap<u64, FrameMeta> = manifest
            .clusters
            .iter()
            .flat_map(|c| c.members.iter().map(|m| (m.frame_id, *m)))
            .collect();

        let mut records = Vec::with_capacity(manifest.index_count);
        for (i, meta) in manifest.records.iter().enumerate() {
            let offset = i * manifest.dimension * 4;
            let values: Vec<f32> = vector_bytes[offset..offset + manifest.dimension * 4]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            records.push(Arc::new(IndexedFrame {
                index_id: meta.index_id,
                frame_id: meta.frame_id,
                cluster_id: meta.cluster_id,
                aux_prompt: meta.aux_prompt.clone(),
                embedding: EmbeddingVector::from_unit_values(values)?,
            }));
        }

        let state = StoreState {
            dimension: manifest.dimension,
            sequence: manifest.sequence,
            records,
            clusters,
            frames,
        };
        Ok(MemoryStore {
            root: root.to_path_buf(),
            state: RwLock::new(Arc::new(state)),
            writer: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dimension(&self) -> usize {
        self.state.read().unwrap().dimension
    }

    /// Inserts one index record with its cluster and raw frames. Atomic: a
    /// crash leaves either both layers visible or neither. Returns the new
    /// sequence number.
    pub fn insert_indexed_frame(
        &self,
        record: IndexedFrame,
        cluster: Cluster,
        frames: Vec<Frame>,
    ) -> Result<u64> {
        self.insert_batch(vec![InsertItem {
            record,
            cluster,
            frames,
        }])
    }

    /// Inserts a batch of records under one commit (one manifest rewrite,
    /// one sequence increment). Validates everything before touching disk, so
    /// a rejected batch leaves the store unchanged.
    pub fn insert_batch(&self, items: Vec<InsertItem>) -> Result<u64> {
        if items.is_empty() {
            return Err(Error::Store("empty insert batch".into()));
        }
        let _writer = self.writer.lock().unwrap();
        let current = self.state.read().unwrap().clone();

        let mut new_index_ids = BTreeSet::new();
        let mut new_cluster_ids = BTreeSet::new();
        let mut new_frame_ids = BTreeSet::new();
        for item in &items {
            let record = &item.record;
            let cluster = &item.cluster;
            if record.embedding.dimension() != current.dimension {
                return Err(Error::EmbeddingDimension {
                    expected: current.dimension,
                    got: record.embedding.dimension(),
                });
            }
            if current.records.iter().any(|r| r.index_id == record.index_id)
                || !new_index_ids.insert(record.index_id)
            {
                return Err(Error::DuplicateIndexId(record.index_id));
            }
            cluster.validate()?;
            if !cluster.is_finalized() {
                return Err(Error::Store(format!(
                    "cluster {} is not finalized",
                    cluster.cluster_id
                )));
            }
            if record.cluster_id != cluster.cluster_id {
                return Err(Error::Store(format!(
                    "record {} links cluster {} but batch carries cluster {}",
                    record.index_id, record.cluster_id, cluster.cluster_id
                )));
            }
            if cluster.index_frame_id != Some(record.frame_id) {
                return Err(Error::Store(format!(
                    "record {} frame {} is not cluster {}'s index frame",
                    record.index_id, record.frame_id, cluster.cluster_id
                )));
            }
            if current.clusters.contains_key(&cluster.cluster_id)
                || !new_cluster_ids.insert(cluster.cluster_id)
            {
                return Err(Error::Store(format!(
                    "cluster id {} already present",
                    cluster.cluster_id
                )));
            }
            let member_ids: Vec<u64> = item.frames.iter().map(|f| f.frame_id).collect();
            if member_ids != cluster.member_frame_ids {
                return Err(Error::Store(format!(
                    "cluster {} frames do not match member list",
                    cluster.cluster_id
                )));
            }
            for frame in &item.frames {
                frame.validate()?;
                if current.frames.contains_key(&frame.frame_id)
                    || !new_frame_ids.insert(frame.frame_id)
                {
                    return Err(Error::Store(format!(
                        "frame id {} already present",
                        frame.frame_id
                    )));
                }
            }
        }

        // Raw layer first: orphan files are invisible until the manifest
        // rename commits the batch.
        let frame_dir = self.root.join(FRAME_DIR);
        for item in &items {
            for frame in &item.frames {
                let path = frame_dir.join(format!("{}.png", frame.frame_id));
                imageio::write_png(&path, frame)?;
            }
        }

        let vector_path = self.root.join(VECTOR_FILE);
        let mut vector_file = fs::OpenOptions::new()
            .append(true)
            .open(&vector_path)
            .map_err(|e| Error::io(&vector_path, e))?;
        let mut payload =
            Vec::with_capacity(items.len() * current.dimension * 4);
        for item in &items {
            for &v in item.record.embedding.values() {
                payload.extend_from_slice(&v.to_le_bytes());
            }
        }
        vector_file
            .write_all(&payload)
            .and_then(|_| vector_file.sync_all())
            .map_err(|e| Error::io(&vector_path, e))?;

        let mut records = current.records.clone();
        let mut clusters = current.clusters.clone();
        let mut frames = current.frames.clone();
        for item in items {
            let members = item
                .frames
                .iter()
                .map(|f| FrameMeta {
                    frame_id: f.frame_id,
                    timestamp: f.timestamp,
                    width: f.width,
                    height: f.height,
                })
                .collect::<Vec<_>>();
            for m in &members {
                frames.insert(m.frame_id, *m);
            }
            clusters.insert(
                item.cluster.cluster_id,
                Arc::new(ClusterMeta {
                    cluster_id: item.cluster.cluster_id,
                    partition_id: item.cluster.partition_id,
                    index_frame_id: item.cluster.index_frame_id.expect("finalized"),
                    members,
                }),
            );
            records.push(Arc::new(item.record));
        }
        let next = StoreState {
            dimension: current.dimension,
            sequence: current.sequence + 1,
            records,
            clusters,
            frames,
        };
        write_manifest_atomically(&self.root, &next.manifest())?;
        let sequence = next.sequence;
        *self.state.write().unwrap() = Arc::new(next);
        Ok(sequence)
    }

    /// A consistent view of the latest committed state. Never blocks the
    /// writer; concurrent inserts never mutate an open snapshot.
    pub fn open_snapshot(&self) -> Snapshot {
        Snapshot {
            state: self.state.read().unwrap().clone(),
            root: self.root.clone(),
        }
    }

    /// The manifest describing the current committed state.
    pub fn manifest(&self) -> MemoryManifest {
        self.state.read().unwrap().manifest()
    }
}

fn write_manifest_atomically(root: &Path, manifest: &MemoryManifest) -> Result<()> {
    let tmp = root.join("manifest.json.tmp");
    let target = root.join(MANIFEST_FILE);
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(manifest.to_json_pretty().as_bytes())
        .and_then(|_| file.sync_all())
        .map_err(|e| Error::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, &target).map_err(|e| Error::io(&target, e))?;
    if let Ok(dir) = fs::File::open(root) {
        let _ = dir.sync_all();
    }
    Ok(())
}

/// Immutable view over the store as of one sequence number.
#[derive(Clone)]
pub struct Snapshot {
    state: Arc<StoreState>,
    root: PathBuf,
}

impl Snapshot {
    pub fn sequence(&self) -> u64 {
        self.state.sequence
    }

    pub fn dimension(&self) -> usize {
        self.state.dimension
    }

    pub fn index_count(&self) -> usize {
        self.state.records.len()
    }

    pub fn cluster_count(&self) -> usize {
        self.state.clusters.len()
    }

    pub fn frame_count(&self) -> usize {
        self.state.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &IndexedFrame> {
        self.state.records.iter().map(|r| r.as_ref())
    }

    pub fn record(&self, index_id: u64) -> Option<&IndexedFrame> {
        self.state
            .records
            .iter()
            .find(|r| r.index_id == index_id)
            .map(|r| r.as_ref())
    }

    pub fn cluster_meta(&self, cluster_id: u64) -> Option<&ClusterMeta> {
        self.state.clusters.get(&cluster_id).map(|c| c.as_ref())
    }

    pub fn frame_meta(&self, frame_id: u64) -> Option<FrameMeta> {
        self.state.frames.get(&frame_id).copied()
    }

    pub fn manifest(&self) -> MemoryManifest {
        self.state.manifest()
    }

    /// Exact cosine scores against every in-range indexed vector, ordered by
    /// index id. Vectors are unit length, so the score is a plain dot product
    /// accumulated in f64. `time_range` (inclusive) filters on the index
    /// frame's timestamp. An empty snapshot yields an empty list.
    pub fn similarity_search(
        &self,
        query: &EmbeddingVector,
        time_range: Option<(f64, f64)>,
    ) -> Result<Vec<(u64, f64)>> {
        if !self.state.records.is_empty() && query.dimension() != self.state.dimension {
            return Err(Error::EmbeddingDimension {
                expected: self.state.dimension,
                got: query.dimension(),
            });
        }
        let mut scores = Vec::with_capacity(self.state.records.len());
        for record in &self.state.records {
            if let Some((start, end)) = time_range {
                let ts = self
                    .state
                    .frames
                    .get(&record.frame_id)
                    .map(|m| m.timestamp)
                    .unwrap_or(f64::NAN);
                if !(ts >= start && ts <= end) {
                    continue;
                }
            }
            scores.push((record.index_id, query.dot(&record.embedding)?));
        }
        scores.sort_by_key(|&(id, _)| id);
        Ok(scores)
    }

    /// Member frames of a cluster, in frame-id order, pixel-exact as
    /// ingested.
    pub fn fetch_cluster_frames(&self, cluster_id: u64) -> Result<Vec<Frame>> {
        let cluster = self
            .state
            .clusters
            .get(&cluster_id)
            .ok_or(Error::UnknownCluster(cluster_id))?;
        cluster
            .members
            .iter()
            .map(|m| self.load_frame_meta(m))
            .collect()
    }

    /// Loads one raw frame from the PNG archive.
    pub fn load_frame(&self, frame_id: u64) -> Result<Frame> {
        let meta = self
            .state
            .frames
            .get(&frame_id)
            .ok_or_else(|| Error::Store(format!("unknown frame id {frame_id}")))?;
        self.load_frame_meta(meta)
    }

    fn load_frame_meta(&self, meta: &FrameMeta) -> Result<Frame> {
        let path = self.root.join(FRAME_DIR).join(format!("{}.png", meta.frame_id));
        let frame = imageio::read_png_frame(&path, meta.frame_id, meta.timestamp)?;
        if frame.width != meta.width || frame.height != meta.height {
            return Err(Error::Store(format!(
                "frame {} decoded as {}x{} but manifest says {}x{}",
                meta.frame_id, frame.width, frame.height, meta.width, meta.height
            )));
        }
        Ok(frame)
    }
}
