//! Replays the checked-in fuzz corpus seeds against the same entry points the
//! fuzz targets drive, so seeds stay valid and the parsers stay panic-free on
//! them even without a libFuzzer toolchain.

use std::path::PathBuf;

use vidmem::harness::source::StreamSourceSpec;
use vidmem::harness::Scenario;
use vidmem::imageio::{decode_png_frame, encode_png};
use vidmem::store::{MemoryManifest, MemoryStore};
use vidmem::PipelineConfig;

fn corpus(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut seeds: Vec<(PathBuf, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("corpus dir {} missing: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            let bytes = std::fs::read(&path).unwrap();
            (path, bytes)
        })
        .collect();
    seeds.sort();
    assert!(!seeds.is_empty(), "empty corpus for {target}");
    seeds
}

#[test]
fn config_seeds_parse_or_report() {
    let mut accepted = 0;
    for (path, bytes) in corpus("fuzz_config_toml") {
        let Ok(text) = std::str::from_utf8(&bytes) else { continue };
        if let Ok((config, _)) = PipelineConfig::from_toml_str(text) {
            vidmem::validate_config(config).unwrap();
            accepted += 1;
        } else {
            // Rejection is fine; panics are not.
            let _ = path;
        }
    }
    assert!(accepted >= 2, "valid config seeds must stay valid");
}

#[test]
fn manifest_seeds_round_trip() {
    let mut accepted = 0;
    for (_, bytes) in corpus("fuzz_manifest_json") {
        if let Ok(manifest) = MemoryManifest::from_json(&bytes) {
            let back = MemoryManifest::from_json(manifest.to_json_pretty().as_bytes()).unwrap();
            assert_eq!(back, manifest);
            accepted += 1;
        }
    }
    assert!(accepted >= 1, "the generated manifest seed must stay valid");
}

#[test]
fn scenario_seeds_parse() {
    let mut accepted = 0;
    for (_, bytes) in corpus("fuzz_scenario_json") {
        if Scenario::from_json(&bytes).is_ok() {
            accepted += 1;
        }
    }
    assert!(accepted >= 1);
}

#[test]
fn stream_spec_seeds_parse() {
    let mut accepted = 0;
    for (_, bytes) in corpus("fuzz_stream_spec_json") {
        if StreamSourceSpec::from_json(&bytes).is_ok() {
            accepted += 1;
        }
    }
    assert!(accepted >= 2, "synthetic and directory seeds must stay valid");
}

#[test]
fn frame_image_seeds_decode_and_round_trip() {
    let mut accepted = 0;
    for (_, bytes) in corpus("fuzz_frame_image") {
        if let Ok(frame) = decode_png_frame(&bytes, 7, 1.5) {
            let png = encode_png(&frame).unwrap();
            assert_eq!(decode_png_frame(&png, 7, 1.5).unwrap(), frame);
            accepted += 1;
        }
    }
    assert!(accepted >= 1, "the generated PNG seed must stay decodable");
}

#[test]
fn store_open_seeds_never_panic() {
    for (_, bytes) in corpus("fuzz_store_open") {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("manifest.json"), &bytes).unwrap();
        std::fs::write(dir.path().join("vectors.f32"), b"").unwrap();
        std::fs::create_dir_all(dir.path().join("frames")).unwrap();
        if let Ok(store) = MemoryStore::open(dir.path()) {
            store.open_snapshot().manifest().validate().unwrap();
        }
    }
}
