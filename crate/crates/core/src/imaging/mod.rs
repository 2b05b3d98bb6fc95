//! Pixel buffers and the raster operations every detector builds on.

mod integral;
pub mod io;
mod pyramid;

pub use integral::IntegralImage;
pub use pyramid::{build_pyramid, PyramidLevel};

use crate::error::{Error, Result};

/// An 8-bit raster, row-major, channels interleaved (R,G,B for 3 channels).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be >= 1, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "data length {} does not match {width}x{height}x{channels} = {expected}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// A single-valued image.
    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds a grayscale image from a per-pixel function.
    pub fn from_gray_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, 1, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: u8) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    pub fn is_gray(&self) -> bool {
        self.channels == 1
    }
}

/// Luma conversion with 0.299/0.587/0.114 weights, rounded half-up.
///
/// Single-channel input is returned as a copy.
pub fn to_grayscale(img: &ImageBuffer) -> ImageBuffer {
    if img.channels == 1 {
        return img.clone();
    }
    let data = img
        .data
        .chunks_exact(3)
        .map(|px| {
            let weighted = 299 * px[0] as u32 + 587 * px[1] as u32 + 114 * px[2] as u32;
            ((weighted + 500) / 1000) as u8
        })
        .collect();
    ImageBuffer {
        width: img.width,
        height: img.height,
        channels: 1,
        data,
    }
}

/// Expands a grayscale image to three identical channels; RGB input is copied.
pub fn to_rgb(img: &ImageBuffer) -> ImageBuffer {
    if img.channels == 3 {
        return img.clone();
    }
    let data = img.data.iter().flat_map(|&v| [v, v, v]).collect();
    ImageBuffer {
        width: img.width,
        height: img.height,
        channels: 3,
        data,
    }
}

#[derive(Clone, Copy)]
struct Tap {
    i0: usize,
    i1: usize,
    frac: f32,
}

fn bilinear_taps(src: usize, dst: usize) -> Vec<Tap> {
    let ratio = src as f64 / dst as f64;
    let max = (src - 1) as f64;
    (0..dst)
        .map(|d| {
            let s = ((d as f64 + 0.5) * ratio - 0.5).clamp(0.0, max);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            Tap {
                i0,
                i1,
                frac: (s - i0 as f64) as f32,
            }
        })
        .collect()
}

/// Bilinear resampling with half-pixel center alignment and clamped edges.
pub fn resize_bilinear(img: &ImageBuffer, width: usize, height: usize) -> Result<ImageBuffer> {
    if width == 0 || height == 0 {
        return Err(Error::invalid(format!(
            "resize target must be >= 1x1, got {width}x{height}"
        )));
    }
    if width == img.width && height == img.height {
        return Ok(img.clone());
    }
    let xs = bilinear_taps(img.width, width);
    let ys = bilinear_taps(img.height, height);
    let ch = img.channels;
    let stride = img.width * ch;
    let mut data = Vec::with_capacity(width * height * ch);
    for ty in &ys {
        let row0 = &img.data[ty.i0 * stride..(ty.i0 + 1) * stride];
        let row1 = &img.data[ty.i1 * stride..(ty.i1 + 1) * stride];
        for tx in &xs {
            for c in 0..ch {
                let p00 = row0[tx.i0 * ch + c] as f32;
                let p01 = row0[tx.i1 * ch + c] as f32;
                let p10 = row1[tx.i0 * ch + c] as f32;
                let p11 = row1[tx.i1 * ch + c] as f32;
                let top = p00 + (p01 - p00) * tx.frac;
                let bottom = p10 + (p11 - p10) * tx.frac;
                let v = top + (bottom - top) * ty.frac;
                data.push((v + 0.5).floor().clamp(0.0, 255.0) as u8);
            }
        }
    }
    ImageBuffer::new(width, height, ch, data)
}
