//! PNG/JPEG codec helpers shared by the raw frame layer, the stream sources,
//! and the HTTP clients. Raw frames persist as PNG so retrieval is
//! pixel-exact.

use std::io::Cursor;
use std::path::Path;

use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder, ImageReader};

use crate::error::{Error, Result};
use crate::types::Frame;

pub fn encode_png(frame: &Frame) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    PngEncoder::new(&mut bytes)
        .write_image(&frame.pixels, frame.width, frame.height, ExtendedColorType::Rgb8)
        .map_err(|e| Error::Image(format!("encoding frame {}: {e}", frame.frame_id)))?;
    Ok(bytes)
}

pub fn write_png(path: &Path, frame: &Frame) -> Result<()> {
    let bytes = encode_png(frame)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Decodes PNG bytes into a frame, attaching the caller-supplied identity and
/// timestamp (PNG carries neither).
pub fn decode_png_frame(bytes: &[u8], frame_id: u64, timestamp: f64) -> Result<Frame> {
    let (width, height, pixels) = decode_image_bytes(bytes)?;
    Frame::new(frame_id, timestamp, width, height, pixels)
}

pub fn read_png_frame(path: &Path, frame_id: u64, timestamp: f64) -> Result<Frame> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_png_frame(&bytes, frame_id, timestamp)
}

/// Decodes PNG or JPEG bytes to (width, height, RGB8 pixels).
pub fn decode_image_bytes(bytes: &[u8]) -> Result<(u32, u32, Vec<u8>)> {
    let img = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::Image(e.to_string()))?
        .decode()
        .map_err(|e| Error::Image(e.to_string()))?;
    let rgb = img.to_rgb8();
    Ok((rgb.width(), rgb.height(), rgb.into_raw()))
}

pub fn read_image_file(path: &Path) -> Result<(u32, u32, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image_bytes(&bytes)
}
