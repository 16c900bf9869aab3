//! Alpha-weighted error measures over the translucent region `0 < α < 1`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::{ensure_channels, ensure_dims, AlphaMatte, Image};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradParams {
    /// Standard deviation of the Gaussian, in pixels.
    pub sigma: f64,
    /// Kernel half-width; the kernel has `2·radius + 1` taps.
    pub kernel_radius: usize,
}

impl GradParams {
    /// Radius `⌈4σ⌉`.
    pub fn with_sigma(sigma: f64) -> Self {
        Self {
            sigma,
            kernel_radius: (libm::ceil(4.0 * sigma) as usize).max(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                reason: "must be finite and positive",
            });
        }
        if self.kernel_radius == 0 {
            return Err(Error::InvalidParameter {
                name: "kernel_radius",
                reason: "must be at least 1",
            });
        }
        Ok(())
    }
}

impl Default for GradParams {
    fn default() -> Self {
        Self::with_sigma(1.4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub sad: f64,
    pub mse: f64,
    pub grad: f64,
    pub translucent_pixel_count: usize,
}

fn check(est: &Image, gt: &Image, alpha: &AlphaMatte) -> Result<()> {
    ensure_dims("est", est.dimensions(), alpha.dimensions())?;
    ensure_dims("gt", gt.dimensions(), alpha.dimensions())?;
    ensure_channels("gt", gt.channels(), est.channels())
}

/// `Σ_{0<α_i<1} α_i · Σ_c f(est_i^c − gt_i^c)`.
fn weighted_sum(est: &Image, gt: &Image, alpha: &AlphaMatte, f: impl Fn(f64) -> f64) -> f64 {
    let n = est.pixel_count();
    let a = alpha.data();
    (0..n)
        .filter(|&i| alpha.is_translucent(i))
        .map(|i| {
            let per_pixel: f64 = (0..est.channels())
                .map(|c| f(est.data()[c * n + i] - gt.data()[c * n + i]))
                .sum();
            a[i] * per_pixel
        })
        .sum()
}

/// Alpha-weighted sum of absolute differences.
pub fn sad(est: &Image, gt: &Image, alpha_gt: &AlphaMatte) -> Result<f64> {
    check(est, gt, alpha_gt)?;
    Ok(weighted_sum(est, gt, alpha_gt, f64::abs))
}

/// Alpha-weighted sum of squared differences. Despite the customary name
/// this is not divided by the pixel count.
pub fn mse(est: &Image, gt: &Image, alpha_gt: &AlphaMatte) -> Result<f64> {
    check(est, gt, alpha_gt)?;
    Ok(weighted_sum(est, gt, alpha_gt, |d| d * d))
}

/// Sampled Gaussian normalized to unit sum.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let g: Vec<f64> = (-r..=r)
        .map(|j| libm::exp(-((j * j) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let total: f64 = g.iter().sum();
    g.into_iter().map(|v| v / total).collect()
}

/// Sampled first derivative of a Gaussian, applied as a correlation:
/// `∂f(x) = Σ_j k[j]·f(x + j)` for `j ∈ [−radius, radius]`.
///
/// Scaled so that a unit-slope ramp yields exactly 1, i.e. `Σ_j j·k[j] = 1`.
/// The kernel is odd, so it annihilates constants.
pub fn gaussian_derivative_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|j| j as f64 * libm::exp(-((j * j) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let moment: f64 = (-r..=r).zip(&raw).map(|(j, v)| j as f64 * v).sum();
    raw.into_iter().map(|v| v / moment).collect()
}

/// Correlates each row (`horizontal`) or column with `kernel`, clamping
/// sample coordinates to the image.
fn correlate(plane: &[f64], w: usize, h: usize, kernel: &[f64], horizontal: bool) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let off = k as isize - r;
                let (sx, sy) = if horizontal {
                    ((x as isize + off).clamp(0, w as isize - 1) as usize, y)
                } else {
                    (x, (y as isize + off).clamp(0, h as isize - 1) as usize)
                };
                acc += kv * plane[sy * w + sx];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// x- and y-derivatives of a plane: derivative-of-Gaussian along the axis,
/// Gaussian smoothing across it.
pub fn gradient(plane: &[f64], width: usize, height: usize, params: &GradParams) -> (Vec<f64>, Vec<f64>) {
    let d = gaussian_derivative_kernel(params.sigma, params.kernel_radius);
    let g = gaussian_kernel(params.sigma, params.kernel_radius);
    let dx = correlate(&correlate(plane, width, height, &d, true), width, height, &g, false);
    let dy = correlate(&correlate(plane, width, height, &d, false), width, height, &g, true);
    (dx, dy)
}

/// Alpha-weighted squared error of Gaussian-derivative gradients.
pub fn grad_error(est: &Image, gt: &Image, alpha_gt: &AlphaMatte, params: &GradParams) -> Result<f64> {
    check(est, gt, alpha_gt)?;
    params.validate()?;
    let (w, h) = est.dimensions();
    let n = w * h;
    let a = alpha_gt.data();
    let mut per_pixel = vec![0.0; n];
    for c in 0..est.channels() {
        // The filters are linear, so differentiate the difference image.
        let diff: Vec<f64> = est.plane(c).iter().zip(gt.plane(c)).map(|(p, q)| p - q).collect();
        let (dx, dy) = gradient(&diff, w, h, params);
        for i in 0..n {
            per_pixel[i] += dx[i] * dx[i] + dy[i] * dy[i];
        }
    }
    Ok((0..n)
        .filter(|&i| alpha_gt.is_translucent(i))
        .map(|i| a[i] * per_pixel[i])
        .sum())
}

pub fn evaluate(est: &Image, gt: &Image, alpha_gt: &AlphaMatte, params: &GradParams) -> Result<MetricReport> {
    Ok(MetricReport {
        sad: sad(est, gt, alpha_gt)?,
        mse: mse(est, gt, alpha_gt)?,
        grad: grad_error(est, gt, alpha_gt, params)?,
        translucent_pixel_count: (0..alpha_gt.data().len())
            .filter(|&i| alpha_gt.is_translucent(i))
            .count(),
    })
}
