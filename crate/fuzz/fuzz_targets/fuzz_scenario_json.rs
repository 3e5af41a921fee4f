#![no_main]
//! Scenario files come from users; parsing and validation must never panic.

use libfuzzer_sys::fuzz_target;
use vidmem::harness::Scenario;

fuzz_target!(|data: &[u8]| {
    let _ = Scenario::from_json(data);
});
