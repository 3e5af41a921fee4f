#![no_main]
//! Structured fuzz of the on-disk store: arbitrary manifest bytes next to an
//! arbitrary vector file. Opening must never panic, and an accepted store
//! must serve a consistent snapshot.

use arbitrary::Arbitrary;
use libfuzzer_sys::fuzz_target;
use vidmem::store::MemoryStore;

#[derive(Arbitrary, Debug)]
struct StoreImage<'a> {
    manifest: &'a [u8],
    vectors: &'a [u8],
}

fuzz_target!(|image: StoreImage<'_>| {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("manifest.json"), image.manifest).unwrap();
    std::fs::write(dir.path().join("vectors.f32"), image.vectors).unwrap();
    std::fs::create_dir_all(dir.path().join("frames")).unwrap();
    if let Ok(store) = MemoryStore::open(dir.path()) {
        let snapshot = store.open_snapshot();
        snapshot.manifest().validate().expect("opened stores are consistent");
        assert_eq!(snapshot.index_count(), snapshot.manifest().index_count);
    }
});
