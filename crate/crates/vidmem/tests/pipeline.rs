//! Cross-module integration: cost monotonicity, budget monotonicity, the
//! wire-level HTTP backends against a canned local server, and snapshot
//! consistency under a concurrent writer.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vidmem::config::{CostModel, EmbedBackendKind, EmbeddingConfig, PipelineConfig};
use vidmem::embedding::Embedder;
use vidmem::harness::query::{query_latency, retrieve_with_strategy, StrategyKind};
use vidmem::harness::reasoner::{HttpReasoner, Reasoner};
use vidmem::harness::{full_upload_latency, run_ingestion, SceneSpec, StreamSourceSpec, SyntheticSpec};
use vidmem::store::{InsertItem, MemoryStore};
use vidmem::types::{Cluster, EmbeddingVector, Frame, IndexedFrame};

// ---------------------------------------------------------------------------
// Analytic cost monotonicity.
// ---------------------------------------------------------------------------

#[test]
fn more_bandwidth_never_costs_more() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..500 {
        let base = CostModel {
            bandwidth_bps: rng.random_range(1e6..1e9),
            embed_latency_s: rng.random_range(0.0..1.0),
            cloud_base_s: rng.random_range(0.0..2.0),
            cloud_per_frame_s: rng.random_range(0.0..0.5),
            frame_bytes: rng.random_range(1_000..500_000),
            ..CostModel::default()
        };
        let faster = CostModel {
            bandwidth_bps: base.bandwidth_bps * rng.random_range(1.0..100.0),
            ..base.clone()
        };
        let frames = rng.random_range(1..10_000u64);
        assert!(query_latency(&faster, frames).total_s <= query_latency(&base, frames).total_s);
        assert!(
            full_upload_latency(&faster, frames).total_s
                <= full_upload_latency(&base, frames).total_s
        );
    }
}

#[test]
fn larger_budget_never_sends_fewer_frames() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig::default();
    config.embedding.dimension = 32;
    config.clusterer.downscale_edge = 4;
    let source = StreamSourceSpec::Synthetic(SyntheticSpec {
        fps: Some(2.0),
        width: 8,
        height: 8,
        seed: 31,
        scenes: [[220u8, 30, 30], [30, 220, 30], [30, 30, 220]]
            .into_iter()
            .map(|base_color| SceneSpec {
                duration_s: 20.0,
                base_color,
                noise_level: 0.0,
                drift: [0.0; 3],
            })
            .collect(),
    });
    run_ingestion(&source, &config, dir.path()).unwrap();
    let store = MemoryStore::open(dir.path()).unwrap();
    let snapshot = store.open_snapshot();
    let embedder = Embedder::from_config(&config.embedding).unwrap();
    let query = embedder.embed_text("red").unwrap();

    for seed in 0..20u64 {
        let mut previous = 0usize;
        for n in [1usize, 2, 4, 8, 16, 32, 64] {
            let mut retrieval = config.retrieval.clone();
            retrieval.seed = seed;
            retrieval.n_fixed = Some(n);
            let result =
                retrieve_with_strategy(StrategyKind::Fixed, &query, &snapshot, &retrieval).unwrap();
            assert!(
                result.keyframe_ids.len() >= previous,
                "seed {seed}: budget {n} sent {} < previous {previous}",
                result.keyframe_ids.len()
            );
            previous = result.keyframe_ids.len();
        }
    }
}

// ---------------------------------------------------------------------------
// Wire-level HTTP backends against a canned local server.
// ---------------------------------------------------------------------------

struct CannedServer {
    port: u16,
    bodies: Arc<std::sync::Mutex<Vec<String>>>,
    handle: Option<thread::JoinHandle<()>>,
}

impl CannedServer {
    /// Serves each connection one canned (status, body) response, in order,
    /// recording request bodies.
    fn start(responses: Vec<(u16, String)>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let port = listener.local_addr().unwrap().port();
        let bodies = Arc::new(std::sync::Mutex::new(Vec::new()));
        let bodies_in = bodies.clone();
        let handle = thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = match listener.accept() {
                    Ok(pair) => pair,
                    Err(_) => return,
                };
                let mut buf = Vec::new();
                let mut chunk = [0u8; 4096];
                let header_end = loop {
                    let n = stream.read(&mut chunk).unwrap();
                    if n == 0 {
                        break None;
                    }
                    buf.extend_from_slice(&chunk[..n]);
                    if let Some(pos) = find_header_end(&buf) {
                        break Some(pos);
                    }
                };
                let Some(header_end) = header_end else { return };
                let headers = String::from_utf8_lossy(&buf[..header_end]).to_string();
                let content_length: usize = headers
                    .lines()
                    .find_map(|l| {
                        let (name, value) = l.split_once(':')?;
                        name.eq_ignore_ascii_case("content-length")
                            .then(|| value.trim().parse().ok())?
                    })
                    .unwrap_or(0);
                let mut body_bytes = buf[header_end + 4..].to_vec();
                while body_bytes.len() < content_length {
                    let n = stream.read(&mut chunk).unwrap();
                    if n == 0 {
                        break;
                    }
                    body_bytes.extend_from_slice(&chunk[..n]);
                }
                bodies_in
                    .lock()
                    .unwrap()
                    .push(String::from_utf8_lossy(&body_bytes).to_string());
                let reason = if status == 200 { "OK" } else { "Error" };
                let response = format!(
                    "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\n\
                     Content-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(response.as_bytes()).unwrap();
            }
        });
        CannedServer {
            port,
            bodies,
            handle: Some(handle),
        }
    }

    fn endpoint(&self) -> String {
        format!("http://127.0.0.1:{}", self.port)
    }

    fn request_bodies(&mut self) -> Vec<String> {
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
        self.bodies.lock().unwrap().clone()
    }
}

fn find_header_end(buf: &[u8]) -> Option<usize> {
    buf.windows(4).position(|w| w == b"\r\n\r\n")
}

fn canned_vector_json(dimension: usize) -> String {
    let values: Vec<String> = (0..dimension).map(|i| format!("{}.0", i + 1)).collect();
    format!("{{\"vector\": [{}]}}", values.join(", "))
}

#[test]
fn http_embedder_speaks_the_wire_protocol() {
    let mut server = CannedServer::start(vec![
        (200, canned_vector_json(8)),
        (200, canned_vector_json(8)),
    ]);
    let config = EmbeddingConfig {
        backend: EmbedBackendKind::Http,
        dimension: 8,
        endpoint: Some(server.endpoint()),
        timeout_s: 5.0,
        retries: 0,
        ..EmbeddingConfig::default()
    };
    let embedder = Embedder::from_config(&config).unwrap();

    let frame = Frame::solid(0, 0.0, 4, 4, [250, 10, 10]);
    let image_vec = embedder.embed_image(&frame, "objects: red; text:").unwrap();
    assert_eq!(image_vec.dimension(), 8);
    assert!((image_vec.norm() - 1.0).abs() < 1e-6, "client-side normalization");

    let text_vec = embedder.embed_text("what happened").unwrap();
    assert_eq!(text_vec.dimension(), 8);

    let bodies = server.request_bodies();
    assert_eq!(bodies.len(), 2);
    let image_req: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(image_req["modality"], "image");
    assert_eq!(image_req["aux_prompt"], "objects: red; text:");
    let png_b64 = image_req["data"].as_str().unwrap();
    assert!(png_b64.starts_with("iVBOR"), "data carries base64 PNG, got {png_b64:.8}");
    let text_req: serde_json::Value = serde_json::from_str(&bodies[1]).unwrap();
    assert_eq!(text_req["modality"], "text");
    assert_eq!(text_req["data"], "what happened");
}

#[test]
fn http_embedder_rejects_dimension_mismatch() {
    let mut server = CannedServer::start(vec![(200, canned_vector_json(5))]);
    let config = EmbeddingConfig {
        backend: EmbedBackendKind::Http,
        dimension: 8,
        endpoint: Some(server.endpoint()),
        timeout_s: 5.0,
        retries: 0,
        ..EmbeddingConfig::default()
    };
    let embedder = Embedder::from_config(&config).unwrap();
    let err = embedder.embed_text("q").unwrap_err();
    assert!(err.to_string().contains("dimension mismatch"), "{err}");
    let _ = server.request_bodies();
}

#[test]
fn http_embedder_retries_then_reports_attempts() {
    // Two 500s, then a good answer: with retries = 2 the third attempt lands.
    let mut server = CannedServer::start(vec![
        (500, "{}".into()),
        (500, "{}".into()),
        (200, canned_vector_json(8)),
    ]);
    let config = EmbeddingConfig {
        backend: EmbedBackendKind::Http,
        dimension: 8,
        endpoint: Some(server.endpoint()),
        timeout_s: 5.0,
        retries: 2,
        ..EmbeddingConfig::default()
    };
    let embedder = Embedder::from_config(&config).unwrap();
    assert!(embedder.embed_text("q").is_ok());
    assert_eq!(server.request_bodies().len(), 3);

    // All attempts failing surfaces the attempt count.
    let mut failing = CannedServer::start(vec![(500, "{}".into()), (500, "{}".into())]);
    let config = EmbeddingConfig {
        backend: EmbedBackendKind::Http,
        dimension: 8,
        endpoint: Some(failing.endpoint()),
        timeout_s: 5.0,
        retries: 1,
        ..EmbeddingConfig::default()
    };
    let embedder = Embedder::from_config(&config).unwrap();
    let err = embedder.embed_text("q").unwrap_err();
    assert!(err.to_string().contains("after 2 attempt"), "{err}");
    let _ = failing.request_bodies();
}

#[test]
fn http_reasoner_sends_images_chronologically() {
    let answer = r#"{"choices": [{"message": {"content": "the door opened"}}]}"#;
    let mut server = CannedServer::start(vec![(200, answer.into())]);
    let reasoner = HttpReasoner::new(&server.endpoint(), "test-model", 5.0, 0);
    let frames: Vec<Frame> = (0..3)
        .map(|i| Frame::solid(i, i as f64 * 2.0, 4, 4, [i as u8 * 60, 0, 0]))
        .collect();
    let got = Reasoner::Http(reasoner).reason("what happened?", &frames).unwrap();
    assert_eq!(got, "the door opened");

    let bodies = server.request_bodies();
    let req: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(req["model"], "test-model");
    let content = req["messages"][0]["content"].as_array().unwrap();
    assert_eq!(content.len(), 4, "one text part plus three image parts");
    assert_eq!(content[0]["type"], "text");
    assert_eq!(content[0]["text"], "what happened?");
    for part in &content[1..] {
        assert_eq!(part["type"], "image_url");
        let url = part["image_url"]["url"].as_str().unwrap();
        assert!(url.starts_with("data:image/png;base64,"));
    }
    // Image parts decode back to the frames, in chronological order.
    for (i, part) in content[1..].iter().enumerate() {
        let url = part["image_url"]["url"].as_str().unwrap();
        let b64 = url.strip_prefix("data:image/png;base64,").unwrap();
        let png = base64_decode(b64);
        let decoded = vidmem::imageio::decode_png_frame(&png, i as u64, 0.0).unwrap();
        assert_eq!(decoded.pixels, frames[i].pixels);
    }
}

/// Minimal standard-alphabet base64 decoder for test assertions.
fn base64_decode(text: &str) -> Vec<u8> {
    const ALPHABET: &[u8; 64] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    let value = |c: u8| ALPHABET.iter().position(|&a| a == c).unwrap() as u32;
    let clean: Vec<u8> = text.bytes().filter(|&b| b != b'=').collect();
    let mut out = Vec::new();
    for chunk in clean.chunks(4) {
        let mut acc = 0u32;
        for (i, &c) in chunk.iter().enumerate() {
            acc |= value(c) << (18 - 6 * i);
        }
        let bytes = [(acc >> 16) as u8, (acc >> 8) as u8, acc as u8];
        out.extend_from_slice(&bytes[..chunk.len() - 1]);
    }
    out
}

// ---------------------------------------------------------------------------
// Snapshot consistency under a live writer.
// ---------------------------------------------------------------------------

fn consistent_item(i: u64, dimension: usize) -> InsertItem {
    let mut raw = vec![0.0f64; dimension];
    raw[(i as usize) % dimension] = 1.0;
    raw[(i as usize + 1) % dimension] = 0.5;
    InsertItem {
        record: IndexedFrame {
            index_id: i,
            frame_id: i * 2,
            cluster_id: i,
            aux_prompt: format!("objects: item{i}; text:"),
            embedding: EmbeddingVector::normalized(&raw).unwrap(),
        },
        cluster: Cluster {
            cluster_id: i,
            partition_id: i / 4,
            member_frame_ids: vec![i * 2, i * 2 + 1],
            centroid: vec![0.0],
            index_frame_id: Some(i * 2),
        },
        frames: vec![
            Frame::solid(i * 2, i as f64, 2, 2, [(i % 256) as u8, 0, 0]),
            Frame::solid(i * 2 + 1, i as f64 + 0.5, 2, 2, [(i % 256) as u8, 10, 0]),
        ],
    }
}

/// Interleaves one writer with eight snapshot readers for ten seconds; no
/// reader may ever observe a partially applied insert.
#[test]
fn readers_never_observe_partial_inserts() {
    let dir = tempfile::tempdir().unwrap();
    let dimension = 16usize;
    let store = Arc::new(MemoryStore::create(dir.path(), dimension).unwrap());
    let stop = Arc::new(AtomicBool::new(false));
    let deadline = Instant::now() + Duration::from_secs(10);

    thread::scope(|scope| {
        let writer_store = store.clone();
        let writer_stop = stop.clone();
        scope.spawn(move || {
            let mut i = 0u64;
            while Instant::now() < deadline {
                writer_store
                    .insert_batch(vec![consistent_item(i, dimension)])
                    .unwrap();
                i += 1;
                if i.is_multiple_of(50) {
                    thread::sleep(Duration::from_millis(1));
                }
            }
            writer_stop.store(true, Ordering::SeqCst);
        });

        for reader_id in 0..8 {
            let store = store.clone();
            let stop = stop.clone();
            scope.spawn(move || {
                let mut observed = 0u64;
                let mut last_sequence = 0u64;
                while !stop.load(Ordering::SeqCst) {
                    let snap = store.open_snapshot();
                    let sequence = snap.sequence();
                    assert!(sequence >= last_sequence, "sequence went backward");
                    last_sequence = sequence;
                    // One batch per record: visible records == sequence, and
                    // the cluster bijection holds at every instant.
                    assert_eq!(snap.index_count() as u64, sequence, "reader {reader_id}");
                    assert_eq!(snap.cluster_count(), snap.index_count());
                    assert_eq!(snap.frame_count(), snap.index_count() * 2);
                    for record in snap.records() {
                        let cluster = snap
                            .cluster_meta(record.cluster_id)
                            .expect("record links an existing cluster");
                        assert_eq!(cluster.index_frame_id, record.frame_id);
                        assert_eq!(cluster.members.len(), 2);
                    }
                    // The same snapshot keeps answering identically even if
                    // the writer has moved on.
                    if snap.index_count() > 0 {
                        let probe = snap.records().next().unwrap().embedding.clone();
                        let a = snap.similarity_search(&probe, None).unwrap();
                        let b = snap.similarity_search(&probe, None).unwrap();
                        assert_eq!(a, b);
                    }
                    observed += 1;
                }
                assert!(observed > 0);
            });
        }
    });

    let final_snap = store.open_snapshot();
    assert!(final_snap.index_count() > 0);
    final_snap.manifest().validate().unwrap();
}

// ---------------------------------------------------------------------------
// End-to-end conservation restated at the pipeline level.
// ---------------------------------------------------------------------------

#[test]
fn pipeline_conserves_every_source_frame() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig::default();
    config.embedding.dimension = 32;
    config.clusterer.downscale_edge = 4;
    config.segmenter.scene_threshold = 0.05;
    config.segmenter.max_partition_duration_s = 7.0;
    let source = StreamSourceSpec::Synthetic(SyntheticSpec {
        fps: Some(3.0),
        width: 8,
        height: 8,
        seed: 41,
        scenes: [[200u8, 30, 30], [30, 200, 30], [200, 200, 200], [30, 30, 200]]
            .into_iter()
            .map(|base_color| SceneSpec {
                duration_s: 11.0,
                base_color,
                noise_level: 0.04,
                drift: [1.5, 0.0, -1.5],
            })
            .collect(),
    });
    let report = run_ingestion(&source, &config, dir.path()).unwrap();
    assert_eq!(report.member_frames_total, report.frames_ingested);

    let store = MemoryStore::open(dir.path()).unwrap();
    let snapshot = store.open_snapshot();
    assert_eq!(snapshot.frame_count() as u64, report.frames_ingested);
    // Every source frame appears in exactly one cluster.
    let mut seen = std::collections::BTreeSet::new();
    for record in snapshot.records() {
        let cluster = snapshot.cluster_meta(record.cluster_id).unwrap();
        for member in &cluster.members {
            assert!(seen.insert(member.frame_id), "frame {} in two clusters", member.frame_id);
        }
    }
    let expected: std::collections::BTreeSet<u64> = (0..report.frames_ingested).collect();
    assert_eq!(seen, expected);
    assert!(report
        .timings
        .max_queue_depth
        .iter()
        .all(|&d| d <= config.stream.queue_capacity as u64 + 1));
}
