//! PNG import and export.
//!
//! An integer sample `v` of a `b`-bit file reads as `v / (2^b − 1)`; a float
//! `v` writes as `round(v · (2^b − 1))`, clamped.

use std::path::Path;

use clap::ValueEnum;
use fgest_core::{AlphaMatte, Image};
use image::{DynamicImage, ImageBuffer, ImageReader, Luma, Rgb};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BitDepth {
    #[value(name = "8")]
    Eight,
    #[value(name = "16")]
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

/// Where an alpha matte is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlphaSource {
    /// Luminance of a grayscale PNG.
    GrayPng,
    /// Alpha channel of a gray+alpha or RGBA PNG.
    AlphaChannel,
}

/// Decoded samples in `[0, 1]`, interleaved.
struct Raw {
    width: usize,
    height: usize,
    /// Color channels, 1 or 3.
    color: usize,
    has_alpha: bool,
    samples: Vec<f64>,
}

impl Raw {
    fn stride(&self) -> usize {
        self.color + self.has_alpha as usize
    }

    fn plane(&self, channel: usize) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().skip(channel).step_by(self.stride()).copied()
    }
}

fn decode(path: &Path) -> Result<Raw> {
    let read_err = |source| CliError::Read {
        path: path.to_path_buf(),
        source,
    };
    let img = ImageReader::open(path)
        .map_err(|e| read_err(e.into()))?
        .with_guessed_format()
        .map_err(|e| read_err(e.into()))?
        .decode()
        .map_err(read_err)?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let scale8 = |s: Vec<u8>| s.into_iter().map(|v| v as f64 / 255.0).collect();
    let scale16 = |s: Vec<u16>| s.into_iter().map(|v| v as f64 / 65535.0).collect();
    let (color, has_alpha, samples) = match img {
        DynamicImage::ImageLuma8(b) => (1, false, scale8(b.into_raw())),
        DynamicImage::ImageLumaA8(b) => (1, true, scale8(b.into_raw())),
        DynamicImage::ImageRgb8(b) => (3, false, scale8(b.into_raw())),
        DynamicImage::ImageRgba8(b) => (3, true, scale8(b.into_raw())),
        DynamicImage::ImageLuma16(b) => (1, false, scale16(b.into_raw())),
        DynamicImage::ImageLumaA16(b) => (1, true, scale16(b.into_raw())),
        DynamicImage::ImageRgb16(b) => (3, false, scale16(b.into_raw())),
        DynamicImage::ImageRgba16(b) => (3, true, scale16(b.into_raw())),
        other => (3, true, scale16(other.into_rgba16().into_raw())),
    };
    Ok(Raw {
        width,
        height,
        color,
        has_alpha,
        samples,
    })
}

fn to_image(raw: &Raw, channels: usize, path: &Path) -> Result<Image> {
    let n = raw.width * raw.height;
    let mut data = Vec::with_capacity(n * channels);
    for c in 0..channels {
        data.extend(raw.plane(c.min(raw.color - 1)));
    }
    Image::new(raw.width, raw.height, channels, data).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Reads a PNG as a 3-channel image. Gray files are replicated to RGB and
/// any alpha channel is ignored.
pub fn read_rgb(path: &Path) -> Result<Image> {
    to_image(&decode(path)?, 3, path)
}

/// Reads a PNG keeping its color channel count, 1 or 3.
pub fn read_image(path: &Path) -> Result<Image> {
    let raw = decode(path)?;
    to_image(&raw, raw.color, path)
}

pub fn read_alpha(path: &Path, source: AlphaSource) -> Result<AlphaMatte> {
    let raw = decode(path)?;
    let data: Vec<f64> = match source {
        AlphaSource::GrayPng if raw.color == 1 => raw.plane(0).collect(),
        AlphaSource::GrayPng => {
            return Err(CliError::Input(format!(
                "{}: expected a grayscale alpha matte (use --alpha-source alpha-channel for RGBA files)",
                path.display()
            )))
        }
        AlphaSource::AlphaChannel if raw.has_alpha => raw.plane(raw.color).collect(),
        AlphaSource::AlphaChannel => {
            return Err(CliError::Input(format!(
                "{}: file has no alpha channel",
                path.display()
            )))
        }
    };
    AlphaMatte::new(raw.width, raw.height, data).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn quantize_sample(v: f64, max: f64) -> f64 {
    (v * max).round().clamp(0.0, max)
}

/// The image as it reads back after a write at `depth`.
pub fn quantize(image: &Image, depth: BitDepth) -> Image {
    let max = depth.max_value();
    let (w, h) = image.dimensions();
    Image::from_fn(w, h, image.channels(), |x, y, c| {
        quantize_sample(image.get(x, y, c), max) / max
    })
}

/// Writes a 1- or 3-channel image as a gray or RGB PNG.
pub fn write_image(path: &Path, image: &Image, depth: BitDepth) -> Result<()> {
    let (w, h) = image.dimensions();
    let ch = image.channels();
    let n = w * h;
    let max = depth.max_value();
    let interleaved = (0..n * ch).map(|k| quantize_sample(image.data()[(k % ch) * n + k / ch], max));
    let (w, h) = (w as u32, h as u32);
    let result = match (depth, ch) {
        (BitDepth::Eight, 1) => ImageBuffer::<Luma<u8>, _>::from_raw(w, h, interleaved.map(|v| v as u8).collect())
            .map(DynamicImage::ImageLuma8),
        (BitDepth::Eight, _) => ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, interleaved.map(|v| v as u8).collect())
            .map(DynamicImage::ImageRgb8),
        (BitDepth::Sixteen, 1) => ImageBuffer::<Luma<u16>, _>::from_raw(w, h, interleaved.map(|v| v as u16).collect())
            .map(DynamicImage::ImageLuma16),
        (BitDepth::Sixteen, _) => ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, interleaved.map(|v| v as u16).collect())
            .map(DynamicImage::ImageRgb16),
    };
    let buffer = result.expect("buffer length matches dimensions");
    buffer
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        })
}

/// Writes a matte as a gray PNG.
pub fn write_alpha(path: &Path, alpha: &AlphaMatte, depth: BitDepth) -> Result<()> {
    let (w, h) = alpha.dimensions();
    let image = Image::new(w, h, 1, alpha.data().to_vec()).expect("matte values are in range");
    write_image(path, &image, depth)
}
