#![no_main]
//! Raw-layer frames and directory sources decode untrusted image bytes; the
//! decoder must never panic, and anything it accepts must re-encode and
//! decode back pixel-exactly.

use libfuzzer_sys::{fuzz_target, Corpus};
use vidmem::imageio::{decode_png_frame, encode_png};

fuzz_target!(|data: &[u8]| -> Corpus {
    match decode_png_frame(data, 7, 1.5) {
        Ok(frame) => {
            let png = encode_png(&frame).expect("decoded frames re-encode");
            let back = decode_png_frame(&png, 7, 1.5).expect("re-encoded frames decode");
            assert_eq!(back, frame);
            Corpus::Keep
        }
        Err(_) => Corpus::Reject,
    }
});
