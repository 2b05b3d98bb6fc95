//! Image file I/O: binary PGM/PPM (P5/P6, maxval 255) and PNG.

use std::fs;
use std::path::Path;

use super::ImageBuffer;
use crate::error::{Error, Result};

/// Loads a PGM, PPM or PNG file, detected by content rather than extension.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| match e {
        Error::ImageDecode(msg) => Error::ImageDecode(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn decode_image(bytes: &[u8]) -> Result<ImageBuffer> {
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        decode_pnm(bytes)
    } else if bytes.starts_with(b"\x89PNG") {
        decode_png(bytes)
    } else {
        Err(Error::ImageDecode(
            "unrecognized image format (expected P5/P6 or PNG)".into(),
        ))
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::ImageDecode("malformed PNM header".into()))
    }
}

fn decode_pnm(bytes: &[u8]) -> Result<ImageBuffer> {
    let channels = if bytes[1] == b'5' { 1 } else { 3 };
    let mut header = Header { bytes, pos: 2 };
    let width = header.number()?;
    let height = header.number()?;
    let maxval = header.number()?;
    if maxval != 255 {
        return Err(Error::ImageDecode(format!(
            "unsupported PNM maxval {maxval} (only 255)"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let start = header.pos + 1;
    let len = width * height * channels;
    if bytes.len() < start + len {
        return Err(Error::ImageDecode(format!(
            "truncated PNM raster: need {len} bytes"
        )));
    }
    ImageBuffer::new(width, height, channels, bytes[start..start + len].to_vec())
        .map_err(|e| Error::ImageDecode(e.to_string()))
}

fn decode_png(bytes: &[u8]) -> Result<ImageBuffer> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::ImageDecode(e.to_string()))?;
    let buffer = match img.color().channel_count() {
        1 | 2 => {
            let gray = img.to_luma8();
            ImageBuffer::new(
                gray.width() as usize,
                gray.height() as usize,
                1,
                gray.into_raw(),
            )
        }
        _ => {
            let rgb = img.to_rgb8();
            ImageBuffer::new(rgb.width() as usize, rgb.height() as usize, 3, rgb.into_raw())
        }
    };
    buffer.map_err(|e| Error::ImageDecode(e.to_string()))
}

/// Encodes as binary PGM (1 channel) or PPM (3 channels).
pub fn encode_pnm(img: &ImageBuffer) -> Vec<u8> {
    let magic = if img.is_gray() { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

/// Writes PGM/PPM or PNG depending on the file extension (`.png` selects PNG).
pub fn save_image(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png {
        let color = if img.is_gray() {
            image::ExtendedColorType::L8
        } else {
            image::ExtendedColorType::Rgb8
        };
        let mut out = Vec::new();
        image::ImageEncoder::write_image(
            image::codecs::png::PngEncoder::new(&mut out),
            img.data(),
            img.width() as u32,
            img.height() as u32,
            color,
        )
        .map_err(|e| Error::ImageDecode(e.to_string()))?;
        out
    } else {
        encode_pnm(img)
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
