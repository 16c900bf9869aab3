//! sRGB transfer curves and least-squares white-point correction.
//!
//! The transfer curves use the sRGB branch constants with a configurable
//! exponent. For exponents other than 2.4 the two branches no longer meet at
//! the knee, so the curves are discontinuous there and the forward curve
//! dips (for γ = 2 it falls from 0.04045 to about 0.00403 at
//! `l = 0.0031308`). Decoding then re-encoding returns the input up to
//! rounding except in the narrow band `(0.0031308·12.92, 0.04045]` next to
//! the knee.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::{clamp01, ensure_channels, Image};

const LINEAR_SLOPE: f64 = 12.92;
const SRGB_KNEE: f64 = 0.04045;
const LINEAR_KNEE: f64 = 0.0031308;
const OFFSET: f64 = 0.055;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    pub gamma: f64,
}

impl Default for GammaParams {
    fn default() -> Self {
        Self { gamma: 2.0 }
    }
}

impl GammaParams {
    pub fn validate(&self) -> Result<()> {
        if self.gamma > 0.0 && self.gamma.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "gamma",
                reason: "must be finite and positive",
            })
        }
    }
}

/// Inverse gamma correction: encoded `s` to linear light.
pub fn srgb_to_linear(s: f64, params: &GammaParams) -> f64 {
    let s = clamp01(s);
    if s <= SRGB_KNEE {
        s / LINEAR_SLOPE
    } else {
        libm::pow((s + OFFSET) / (1.0 + OFFSET), params.gamma)
    }
}

/// Gamma correction: linear `l` to encoded.
pub fn linear_to_srgb(l: f64, params: &GammaParams) -> f64 {
    let l = clamp01(l);
    if l <= LINEAR_KNEE {
        LINEAR_SLOPE * l
    } else {
        // 1.055·p − 0.055, arranged so that l = 1 maps to exactly 1. For
        // γ below about 1.95 this dips under 0 just past the knee.
        let p = libm::pow(l, 1.0 / params.gamma);
        clamp01(p + OFFSET * (p - 1.0))
    }
}

fn map_image(image: &Image, f: impl Fn(f64) -> f64) -> Image {
    let data = image.data().iter().map(|&v| f(v)).collect();
    Image::from_raw_clamped(image.width(), image.height(), image.channels(), data)
}

pub fn srgb_to_linear_image(image: &Image, params: &GammaParams) -> Image {
    map_image(image, |v| srgb_to_linear(v, params))
}

pub fn linear_to_srgb_image(image: &Image, params: &GammaParams) -> Image {
    map_image(image, |v| linear_to_srgb(v, params))
}

pub type Matrix3 = [[f64; 3]; 3];

pub const IDENTITY: Matrix3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[inline]
pub fn mat_vec(m: &Matrix3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|r| m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2])
}

/// Least-squares color transform `M` minimizing `Σ_i ‖M·v_i − w_i‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhitePointFit {
    pub matrix: Matrix3,
    /// The minimized sum of squared errors.
    pub residual: f64,
}

/// Sum of squared errors of `m` over the color pairs.
pub fn fit_residual(m: &Matrix3, source: &[[f64; 3]], target: &[[f64; 3]]) -> f64 {
    source
        .iter()
        .zip(target)
        .map(|(&v, w)| {
            let p = mat_vec(m, v);
            (0..3).map(|c| (p[c] - w[c]) * (p[c] - w[c])).sum::<f64>()
        })
        .sum()
}

/// Solves `G·X = R` for symmetric 3×3 `G` by Gaussian elimination with
/// complete pivoting. Returns the numerical rank on failure.
fn solve3(mut g: Matrix3, mut rhs: Matrix3) -> core::result::Result<Matrix3, usize> {
    let scale = (0..3).map(|i| g[i][i].abs()).fold(0.0, f64::max);
    let tiny = scale * 1e-12;
    let mut col_order = [0usize, 1, 2];
    for k in 0..3 {
        let (mut pr, mut pc, mut best) = (k, k, -1.0);
        for (r, row) in g.iter().enumerate().skip(k) {
            for (c, v) in row.iter().enumerate().skip(k) {
                if v.abs() > best {
                    (pr, pc, best) = (r, c, v.abs());
                }
            }
        }
        if !(best > tiny) {
            return Err(k);
        }
        g.swap(k, pr);
        rhs.swap(k, pr);
        if pc != k {
            for row in g.iter_mut() {
                row.swap(k, pc);
            }
            col_order.swap(k, pc);
        }
        for r in k + 1..3 {
            let factor = g[r][k] / g[k][k];
            for c in k..3 {
                g[r][c] -= factor * g[k][c];
            }
            for c in 0..3 {
                rhs[r][c] -= factor * rhs[k][c];
            }
        }
    }
    let mut x = [[0.0; 3]; 3];
    for k in (0..3).rev() {
        for c in 0..3 {
            let mut s = rhs[k][c];
            for j in k + 1..3 {
                s -= g[k][j] * x[j][c];
            }
            x[k][c] = s / g[k][k];
        }
    }
    // Undo the column permutation: row k of x belongs to unknown col_order[k].
    let mut out = [[0.0; 3]; 3];
    for k in 0..3 {
        out[col_order[k]] = x[k];
    }
    Ok(out)
}

/// Fits `M = (WᵀV)(VᵀV)⁻¹` from source colors `V` and target colors `W`
/// (one row per pixel). Accumulation runs in slice order.
pub fn fit_white_point(source: &[[f64; 3]], target: &[[f64; 3]]) -> Result<WhitePointFit> {
    if source.len() != target.len() {
        return Err(Error::InvalidParameter {
            name: "target",
            reason: "source and target must hold the same number of colors",
        });
    }
    if source.len() < 3 {
        return Err(Error::RankDeficient { rank: source.len() });
    }
    let mut vtv = [[0.0; 3]; 3];
    let mut wtv = [[0.0; 3]; 3];
    for (v, w) in source.iter().zip(target) {
        for a in 0..3 {
            for b in 0..3 {
                vtv[a][b] += v[a] * v[b];
                wtv[a][b] += w[a] * v[b];
            }
        }
    }
    // M·VᵀV = WᵀV  ⇔  VᵀV·Mᵀ = (WᵀV)ᵀ
    let mut wtv_t = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            wtv_t[a][b] = wtv[b][a];
        }
    }
    let mt = solve3(vtv, wtv_t).map_err(|rank| Error::RankDeficient { rank })?;
    let mut matrix = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            matrix[a][b] = mt[b][a];
        }
    }
    Ok(WhitePointFit {
        matrix,
        residual: fit_residual(&matrix, source, target),
    })
}

/// Pixel colors of a 3-channel image in scanline order.
pub fn pixels(image: &Image) -> Result<Vec<[f64; 3]>> {
    ensure_channels("image", image.channels(), 3)?;
    let n = image.pixel_count();
    let d = image.data();
    Ok((0..n).map(|i| [d[i], d[n + i], d[2 * n + i]]).collect())
}

/// `M·v` per pixel without clamping.
fn transform(image: &Image, m: &Matrix3) -> Result<Vec<[f64; 3]>> {
    Ok(pixels(image)?.into_iter().map(|v| mat_vec(m, v)).collect())
}

fn from_pixels(width: usize, height: usize, px: &[[f64; 3]], f: impl Fn(f64) -> f64) -> Image {
    let mut data = Vec::with_capacity(px.len() * 3);
    for c in 0..3 {
        data.extend(px.iter().map(|p| f(p[c])));
    }
    Image::from_raw_clamped(width, height, 3, data)
}

/// Multiplies every color by the fitted matrix and clamps to `[0, 1]`.
pub fn apply_white_point(image: &Image, fit: &WhitePointFit) -> Result<Image> {
    let px = transform(image, &fit.matrix)?;
    Ok(from_pixels(image.width(), image.height(), &px, |v| v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// White-point corrected foreground in sRGB.
    pub fg_gt: Image,
    /// White-point corrected composite in sRGB, the estimator input.
    pub img_input: Image,
    pub fit: WhitePointFit,
}

/// Builds ground truth from linear captures without white point and an sRGB
/// capture with white point:
///
/// 1. linearize `img_srgb_wp`;
/// 2. fit `M` mapping `img_linear` colors onto it;
/// 3. apply `M` to `fg_linear` and `img_linear`;
/// 4. gamma-encode both.
///
/// Values are clamped only when leaving the pipeline.
pub fn prepare_ground_truth(
    fg_linear: &Image,
    img_linear: &Image,
    img_srgb_wp: &Image,
    params: &GammaParams,
) -> Result<GroundTruth> {
    params.validate()?;
    crate::image::ensure_dims("img_linear", img_linear.dimensions(), fg_linear.dimensions())?;
    crate::image::ensure_dims("img_srgb", img_srgb_wp.dimensions(), fg_linear.dimensions())?;
    let target: Vec<[f64; 3]> = pixels(img_srgb_wp)?
        .into_iter()
        .map(|p| p.map(|s| srgb_to_linear(s, params)))
        .collect();
    let fit = fit_white_point(&pixels(img_linear)?, &target)?;
    let (w, h) = fg_linear.dimensions();
    let encode = |v| linear_to_srgb(v, params);
    Ok(GroundTruth {
        fg_gt: from_pixels(w, h, &transform(fg_linear, &fit.matrix)?, encode),
        img_input: from_pixels(w, h, &transform(img_linear, &fit.matrix)?, encode),
        fit,
    })
}
