#![no_main]
//! Stream source specs parse from user JSON. Accepted synthetic scripts with
//! small bounds also get generated for a few frames, which must validate.

use libfuzzer_sys::fuzz_target;
use vidmem::harness::source::{open_stream, StreamSourceSpec};

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = StreamSourceSpec::from_json(data) else { return };
    if let Some(synthetic) = spec.synthetic() {
        let fps = synthetic.fps.unwrap_or(1.0);
        let frames = synthetic.total_duration_s() * fps;
        let pixels = synthetic.width as u64 * synthetic.height as u64;
        if frames.is_finite() && frames <= 8.0 && pixels <= 64 * 64 {
            for frame in open_stream(&spec, 1.0).unwrap() {
                frame.expect("scripted frames are valid").validate().unwrap();
            }
        }
    }
});
