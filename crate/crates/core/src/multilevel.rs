//! Multi-level local color estimation.
//!
//! Each pixel minimizes a local cost: the compositing residual
//! `(α·F + (1 − α)·B − I)²` plus, for every 4-neighbor `j`, a smoothness
//! penalty `(ε_r + ω|α_i − α_j|)·((F_i − F_j)² + (B_i − B_j)²)`. The
//! minimizer is a 2×2 linear solve whose matrix is shared by all color
//! channels. Sweeps of these updates are run on a pyramid whose levels grow
//! from 1×1 up to the input size, each level initialized from the one
//! before, so colors propagate across the image with only local work.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::{clamp01, ensure_channels, ensure_dims, AlphaMatte, Image, Resize};

/// Controls for [`ml_foreground_background`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlParams {
    /// Weight of the alpha-gradient term, `ω`.
    pub omega: f64,
    /// Uniform regularizer `ε_r`. Must be positive.
    pub eps_r: f64,
    /// Levels whose larger side is at most this many pixels are "low
    /// resolution" and get `iters_low` sweeps.
    pub low_res_threshold: usize,
    pub iters_low: usize,
    pub iters_high: usize,
}

impl Default for MlParams {
    fn default() -> Self {
        Self {
            omega: 0.1,
            eps_r: 5e-3,
            low_res_threshold: 32,
            iters_low: 10,
            iters_high: 2,
        }
    }
}

impl MlParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "omega",
                reason: "must be finite and non-negative",
            });
        }
        if !(self.eps_r > 0.0 && self.eps_r.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "eps_r",
                reason: "must be finite and positive",
            });
        }
        if self.iters_low == 0 || self.iters_high == 0 {
            return Err(Error::InvalidParameter {
                name: "iterations",
                reason: "iteration counts must be at least 1",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Level {
    pub width: usize,
    pub height: usize,
    pub iterations: usize,
}

/// Pyramid sizes from coarsest to finest; the last level is the input size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSchedule {
    levels: Vec<Level>,
}

impl LevelSchedule {
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Number of pyramid levels, `⌈log₂ max(w, h)⌉`. Zero for a 1×1 input,
    /// whose schedule still holds the single full-size level.
    pub fn level_count(&self) -> usize {
        match self.levels.as_slice() {
            [Level {
                width: 1, height: 1, ..
            }] => 0,
            levels => levels.len(),
        }
    }
}

/// `⌈log₂ n⌉` for `n ≥ 1`.
fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Sizes of one axis across `count` levels ending at `full`.
///
/// Level `l` nominally has size `round(full^(l/count))`. Rounding alone can
/// let a level more than double its predecessor (e.g. 7 → 15 for
/// `full = 56`), so sizes are raised where needed, walking down from the
/// full size, to keep every step within a factor of two.
fn axis_sizes(full: usize, count: usize) -> Vec<usize> {
    let mut sizes = vec![full; count];
    for l in (1..count).rev() {
        let nominal = libm::round(libm::pow(full as f64, l as f64 / count as f64)) as usize;
        sizes[l - 1] = nominal.max(sizes[l].div_ceil(2)).max(1);
    }
    sizes
}

pub fn level_schedule(full_width: usize, full_height: usize, params: &MlParams) -> Result<LevelSchedule> {
    if full_width == 0 || full_height == 0 {
        return Err(Error::InvalidParameter {
            name: "size",
            reason: "image dimensions must be at least 1",
        });
    }
    let count = ceil_log2(full_width.max(full_height)).max(1);
    let widths = axis_sizes(full_width, count);
    let heights = axis_sizes(full_height, count);
    let levels = widths
        .into_iter()
        .zip(heights)
        .map(|(width, height)| Level {
            width,
            height,
            iterations: if width.max(height) <= params.low_res_threshold {
                params.iters_low
            } else {
                params.iters_high
            },
        })
        .collect();
    Ok(LevelSchedule { levels })
}

/// The 2×2 normal equations of one pixel's local cost, for all three
/// channels at once: `A·[F; B] = b`, where
/// `A = U·Uᵀ + Σ_j Δ_j·I₂` with `U = [α, 1 − α]ᵀ`, and column `c` of `b`
/// is `I^c·U + Σ_j Δ_j·[F_j^c; B_j^c]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerPixelSystem {
    /// Symmetric matrix stored as `[a11, a12, a22]`.
    pub a: [f64; 3],
    /// Row 0: foreground right-hand sides, row 1: background.
    pub b: [[f64; 3]; 2],
    alpha: f64,
}

impl PerPixelSystem {
    /// Data term only.
    #[inline(always)]
    pub fn new(alpha: f64, intensity: [f64; 3]) -> Self {
        let beta = 1.0 - alpha;
        Self {
            a: [alpha * alpha, alpha * beta, beta * beta],
            b: [
                [alpha * intensity[0], alpha * intensity[1], alpha * intensity[2]],
                [beta * intensity[0], beta * intensity[1], beta * intensity[2]],
            ],
            alpha,
        }
    }

    /// Adds the smoothness coupling to neighbor `j`.
    #[inline(always)]
    pub fn add_neighbor(&mut self, params: &MlParams, alpha_j: f64, fg_j: [f64; 3], bg_j: [f64; 3]) {
        let delta = params.eps_r + params.omega * (self.alpha - alpha_j).abs();
        self.a[0] += delta;
        self.a[2] += delta;
        for c in 0..3 {
            self.b[0][c] += delta * fg_j[c];
            self.b[1][c] += delta * bg_j[c];
        }
    }

    /// `A⁻¹·b` via the adjugate, before any clamping. Row 0 is `F`, row 1 `B`.
    #[inline(always)]
    pub fn solve(&self) -> Result<[[f64; 3]; 2]> {
        let [a11, a12, a22] = self.a;
        let det = a11 * a22 - a12 * a12;
        if !(det > f64::MIN_POSITIVE && det.is_finite()) {
            return Err(Error::SingularSystem { determinant: det });
        }
        let inv = 1.0 / det;
        let mut g = [[0.0; 3]; 2];
        for c in 0..3 {
            let (b1, b2) = (self.b[0][c], self.b[1][c]);
            g[0][c] = (a22 * b1 - a12 * b2) * inv;
            g[1][c] = (a11 * b2 - a12 * b1) * inv;
        }
        Ok(g)
    }
}

/// Solves one pixel's local problem and clamps the result to `[0, 1]`.
///
/// The three neighbor slices must have the same non-zero length. Returns
/// `(F_i, B_i)`.
pub fn solve_pixel(
    alpha_i: f64,
    intensity: [f64; 3],
    neighbor_alphas: &[f64],
    neighbor_fg: &[[f64; 3]],
    neighbor_bg: &[[f64; 3]],
    params: &MlParams,
) -> Result<([f64; 3], [f64; 3])> {
    if neighbor_alphas.is_empty()
        || neighbor_fg.len() != neighbor_alphas.len()
        || neighbor_bg.len() != neighbor_alphas.len()
    {
        return Err(Error::InvalidParameter {
            name: "neighbors",
            reason: "neighbor lists must be non-empty and of equal length",
        });
    }
    let mut system = PerPixelSystem::new(alpha_i, intensity);
    for ((&a, &f), &b) in neighbor_alphas.iter().zip(neighbor_fg).zip(neighbor_bg) {
        system.add_neighbor(params, a, f, b);
    }
    let g = system.solve()?;
    Ok((g[0].map(clamp01), g[1].map(clamp01)))
}

/// Estimates foreground and background colors of a 3-channel image.
pub fn ml_foreground_background(image: &Image, alpha: &AlphaMatte, params: &MlParams) -> Result<(Image, Image)> {
    params.validate()?;
    ensure_dims("image", image.dimensions(), alpha.dimensions())?;
    ensure_channels("image", image.channels(), 3)?;

    let schedule = level_schedule(image.width(), image.height(), params)?;
    let mut fg = Image::filled(1, 1, 3, 0.0);
    let mut bg = Image::filled(1, 1, 3, 0.0);
    for level in schedule.levels() {
        let (w, h) = (level.width, level.height);
        // The observed image and matte are always resampled from full
        // resolution; only F and B carry over between levels.
        let level_image = image.resize(w, h)?;
        let level_alpha = alpha.resize(w, h)?;
        fg = fg.resize(w, h)?;
        bg = bg.resize(w, h)?;
        for _ in 0..level.iterations {
            sweep(&level_image, &level_alpha, &mut fg, &mut bg, params)?;
        }
    }
    Ok((fg, bg))
}

/// One Gauss–Seidel pass in scanline order: each pixel is solved from its
/// clamped 4-neighborhood and written back immediately.
pub fn sweep(image: &Image, alpha: &AlphaMatte, fg: &mut Image, bg: &mut Image, params: &MlParams) -> Result<()> {
    let (w, h) = alpha.dimensions();
    ensure_dims("image", image.dimensions(), (w, h))?;
    ensure_dims("fg", fg.dimensions(), (w, h))?;
    ensure_dims("bg", bg.dimensions(), (w, h))?;
    ensure_channels("image", image.channels(), 3)?;
    ensure_channels("fg", fg.channels(), 3)?;
    ensure_channels("bg", bg.channels(), 3)?;

    let n = w * h;
    let a = alpha.data();
    let img = image.data();
    let f = fg.data_mut();
    let b = bg.data_mut();
    let gather = |p: &[f64], j: usize| [p[j], p[n + j], p[2 * n + j]];

    for y in 0..h {
        let up = y.saturating_sub(1);
        let down = (y + 1).min(h - 1);
        for x in 0..w {
            let i = y * w + x;
            let neighbors = [
                y * w + x.saturating_sub(1),
                y * w + (x + 1).min(w - 1),
                up * w + x,
                down * w + x,
            ];
            let mut system = PerPixelSystem::new(a[i], gather(img, i));
            for j in neighbors {
                system.add_neighbor(params, a[j], gather(f, j), gather(b, j));
            }
            let g = system.solve()?;
            for c in 0..3 {
                f[c * n + i] = clamp01(g[0][c]);
                b[c * n + i] = clamp01(g[1][c]);
            }
        }
    }
    Ok(())
}
