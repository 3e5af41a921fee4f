#![no_main]
//! Manifest decoding must never panic; an accepted manifest round-trips
//! through serialization.

use libfuzzer_sys::fuzz_target;
use vidmem::store::MemoryManifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(manifest) = MemoryManifest::from_json(data) {
        let json = manifest.to_json_pretty();
        let back = MemoryManifest::from_json(json.as_bytes()).expect("round trip");
        assert_eq!(back, manifest);
    }
});
