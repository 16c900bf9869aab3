//! Raster containers, bilinear resizing and alpha compositing.
//!
//! Color data is stored planar: channel `c` of pixel `(x, y)` lives at
//! `c * width * height + y * width + x`. Every stored value is finite and
//! in `[0, 1]`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[inline]
pub(crate) fn clamp01(v: f64) -> f64 {
    // NaN-free inputs are assumed.
    v.clamp(0.0, 1.0)
}

fn check_values(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(index) => Err(Error::ValueOutOfRange {
            index,
            value: data[index],
        }),
        None => Ok(()),
    }
}

/// Planar float image with 1 or 3 channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || !(channels == 1 || channels == 3) || data.len() != width * height * channels {
            return Err(Error::InvalidShape {
                width,
                height,
                channels,
                len: data.len(),
            });
        }
        check_values(&data)?;
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Image with every sample set to `value` (clamped to `[0, 1]`).
    ///
    /// # Panics
    ///
    /// Panics on a zero dimension or a channel count other than 1 or 3.
    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        Self::from_fn(width, height, channels, |_, _, _| value)
    }

    /// Image with every pixel set to the given color.
    pub fn solid(width: usize, height: usize, color: [f64; 3]) -> Self {
        Self::from_fn(width, height, 3, |_, _, c| color[c])
    }

    /// Builds an image from `f(x, y, channel)`. Values are clamped to `[0, 1]`.
    ///
    /// # Panics
    ///
    /// Panics on a zero dimension, a channel count other than 1 or 3, or if
    /// `f` returns NaN.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        assert!(channels == 1 || channels == 3, "images have 1 or 3 channels");
        let mut data = Vec::with_capacity(width * height * channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    let v = f(x, y, c);
                    assert!(!v.is_nan(), "NaN sample at ({x}, {y}, {c})");
                    data.push(clamp01(v));
                }
            }
        }
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    /// Internal constructor for solver outputs; clamps every value.
    pub(crate) fn from_raw_clamped(width: usize, height: usize, channels: usize, mut data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        for v in &mut data {
            *v = clamp01(*v);
        }
        Self {
            width,
            height,
            channels,
            data,
        }
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

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.pixel_count();
        &self.data[channel * n..(channel + 1) * n]
    }

    /// Callers must keep every value in `[0, 1]`.
    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, channel: usize) -> f64 {
        self.data[channel * self.pixel_count() + y * self.width + x]
    }

    /// Returns a copy whose channels are reordered so that output channel
    /// `k` is input channel `order[k]`.
    pub fn permute_channels(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.channels || order.iter().any(|&c| c >= self.channels) {
            return Err(Error::InvalidParameter {
                name: "order",
                reason: "must list one existing channel per output channel",
            });
        }
        let mut data = Vec::with_capacity(self.data.len());
        for &c in order {
            data.extend_from_slice(self.plane(c));
        }
        Ok(Self { data, ..*self })
    }
}

/// Single-channel opacity map with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMatte {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl AlphaMatte {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::InvalidShape {
                width,
                height,
                channels: 1,
                len: data.len(),
            });
        }
        check_values(&data)?;
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    /// # Panics
    ///
    /// Panics on a zero dimension or if `f` returns NaN.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "matte dimensions must be non-zero");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let v = f(x, y);
                assert!(!v.is_nan(), "NaN alpha at ({x}, {y})");
                data.push(clamp01(v));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// `1 − α` at every pixel.
    pub fn inverted(&self) -> Self {
        Self {
            data: self.data.iter().map(|a| 1.0 - a).collect(),
            ..*self
        }
    }

    /// True if `0 < α < 1` at pixel index `i`.
    #[inline]
    pub fn is_translucent(&self, i: usize) -> bool {
        let a = self.data[i];
        a > 0.0 && a < 1.0
    }
}

pub(crate) fn ensure_dims(operand: &'static str, found: (usize, usize), expected: (usize, usize)) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            operand,
            expected,
            found,
        })
    }
}

pub(crate) fn ensure_channels(operand: &'static str, found: usize, expected: usize) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::ChannelMismatch {
            operand,
            expected,
            found,
        })
    }
}

/// Alpha-blends `fg` over `bg`: `α·F + (1 − α)·B` per channel.
pub fn compose(fg: &Image, bg: &Image, alpha: &AlphaMatte) -> Result<Image> {
    blend(fg, "fg", bg, alpha)
}

/// Composites the observed image itself over a new background, i.e. uses
/// `I` in place of `F`. Colors of the old background bleed through wherever
/// `α < 1`; this is the baseline the estimators improve on.
pub fn compose_naive(image: &Image, bg: &Image, alpha: &AlphaMatte) -> Result<Image> {
    blend(image, "image", bg, alpha)
}

fn blend(front: &Image, front_name: &'static str, bg: &Image, alpha: &AlphaMatte) -> Result<Image> {
    ensure_dims(front_name, front.dimensions(), alpha.dimensions())?;
    ensure_dims("bg", bg.dimensions(), alpha.dimensions())?;
    ensure_channels("bg", bg.channels(), front.channels())?;
    let n = alpha.data.len();
    let mut out = Vec::with_capacity(front.data.len());
    for c in 0..front.channels {
        let f = &front.data[c * n..(c + 1) * n];
        let b = &bg.data[c * n..(c + 1) * n];
        out.extend(
            f.iter()
                .zip(b)
                .zip(&alpha.data)
                .map(|((&f, &b), &a)| a * f + (1.0 - a) * b),
        );
    }
    Ok(Image::from_raw_clamped(front.width, front.height, front.channels, out))
}

/// Bilinear resampling with edge clamping.
pub trait Resize: Sized {
    /// Resamples to `width × height`. Resizing to the current size returns
    /// an exact copy.
    fn resize(&self, width: usize, height: usize) -> Result<Self>;
}

impl Resize for Image {
    fn resize(&self, width: usize, height: usize) -> Result<Self> {
        check_target(width, height)?;
        if (width, height) == self.dimensions() {
            return Ok(self.clone());
        }
        let xs = Taps::new(self.width, width);
        let ys = Taps::new(self.height, height);
        let mut data = Vec::with_capacity(width * height * self.channels);
        for c in 0..self.channels {
            resample_plane(self.plane(c), self.width, &xs, &ys, &mut data);
        }
        Ok(Self {
            width,
            height,
            channels: self.channels,
            data,
        })
    }
}

impl Resize for AlphaMatte {
    fn resize(&self, width: usize, height: usize) -> Result<Self> {
        check_target(width, height)?;
        if (width, height) == self.dimensions() {
            return Ok(self.clone());
        }
        let xs = Taps::new(self.width, width);
        let ys = Taps::new(self.height, height);
        let mut data = Vec::with_capacity(width * height);
        resample_plane(&self.data, self.width, &xs, &ys, &mut data);
        Ok(Self { width, height, data })
    }
}

/// Free-function form of [`Resize::resize`].
pub fn resize<R: Resize>(src: &R, width: usize, height: usize) -> Result<R> {
    src.resize(width, height)
}

fn check_target(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter {
            name: "size",
            reason: "resize target dimensions must be at least 1",
        });
    }
    Ok(())
}

/// Per-axis sample positions: output index `i` reads source samples
/// `lo[i]` and `hi[i]` blended by `t[i]`. Pixel centers are aligned, so
/// output `i` maps to source coordinate `(i + 0.5)·src/dst − 0.5`.
struct Taps {
    lo: Vec<usize>,
    hi: Vec<usize>,
    t: Vec<f64>,
}

impl Taps {
    fn new(src: usize, dst: usize) -> Self {
        let scale = src as f64 / dst as f64;
        let last = (src - 1) as f64;
        let mut taps = Taps {
            lo: vec![0; dst],
            hi: vec![0; dst],
            t: vec![0.0; dst],
        };
        for i in 0..dst {
            let s = ((i as f64 + 0.5) * scale - 0.5).max(0.0).min(last);
            let lo = libm::floor(s) as usize;
            taps.lo[i] = lo;
            taps.hi[i] = (lo + 1).min(src - 1);
            taps.t[i] = s - lo as f64;
        }
        taps
    }
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // Exact for a == b, so constants survive resampling bit-for-bit.
    a + t * (b - a)
}

fn resample_plane(src: &[f64], src_width: usize, xs: &Taps, ys: &Taps, out: &mut Vec<f64>) {
    for ((&y0, &y1), &ty) in ys.lo.iter().zip(&ys.hi).zip(&ys.t) {
        let r0 = &src[y0 * src_width..(y0 + 1) * src_width];
        let r1 = &src[y1 * src_width..(y1 + 1) * src_width];
        for ((&x0, &x1), &tx) in xs.lo.iter().zip(&xs.hi).zip(&xs.t) {
            let top = lerp(r0[x0], r0[x1], tx);
            let bottom = lerp(r1[x0], r1[x1], tx);
            out.push(clamp01(lerp(top, bottom, ty)));
        }
    }
}
