#![no_main]
//! Pipeline configuration parsing and validation must never panic, and an
//! accepted configuration must survive re-validation.

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((config, _warnings)) = vidmem::PipelineConfig::from_toml_str(text) {
        // Normalized output re-validates cleanly.
        vidmem::validate_config(config).unwrap();
    }
});
