#![allow(dead_code, clippy::needless_range_loop)]

use std::f64::consts::TAU;

use fgest_core::{compose, AlphaMatte, Image};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// A composite with known layers.
pub struct Composite {
    pub fg: Image,
    pub bg: Image,
    pub alpha: AlphaMatte,
    pub image: Image,
}

/// Smoothly textured foreground and background over a soft, wobbly blob.
pub fn synthetic(width: usize, height: usize, seed: u64) -> Composite {
    textured(width, height, seed, 0.0)
}

/// Like [`synthetic`], plus a fine directional pattern of amplitude
/// `detail` with a period of three to six pixels.
pub fn textured(width: usize, height: usize, seed: u64, detail: f64) -> Composite {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut wave = || {
        let fx: f64 = rng.gen_range(0.5..2.5);
        let fy: f64 = rng.gen_range(-2.0..2.0);
        let phase: f64 = rng.gen_range(0.0..TAU);
        let amp: f64 = rng.gen_range(0.15..0.3);
        let mid: f64 = rng.gen_range(0.4..0.6);
        let heading: f64 = rng.gen_range(0.0..TAU);
        let period: f64 = rng.gen_range(3.0..6.0);
        let fine_phase: f64 = rng.gen_range(0.0..TAU);
        move |x: f64, y: f64| {
            let (u, v) = (x / width as f64, y / height as f64);
            let along = x * heading.cos() + y * heading.sin();
            mid + amp * (TAU * (fx * u + fy * v) + phase).sin() + detail * (TAU * along / period + fine_phase).sin()
        }
    };
    let fw: Vec<_> = (0..3).map(|_| wave()).collect();
    let bw: Vec<_> = (0..3).map(|_| wave()).collect();
    let (cx, cy): (f64, f64) = (rng.gen_range(0.35..0.65), rng.gen_range(0.35..0.65));
    let radius: f64 = rng.gen_range(0.2..0.35);
    let softness: f64 = rng.gen_range(0.08..0.2);
    let lobes = rng.gen_range(3..8) as f64;
    let wobble: f64 = rng.gen_range(0.0..0.06);

    let uv = |x: usize, y: usize| ((x as f64 + 0.5) / width as f64, (y as f64 + 0.5) / height as f64);
    let fg = Image::from_fn(width, height, 3, |x, y, c| fw[c](x as f64 + 0.5, y as f64 + 0.5));
    let bg = Image::from_fn(width, height, 3, |x, y, c| bw[c](x as f64 + 0.5, y as f64 + 0.5));
    let alpha = AlphaMatte::from_fn(width, height, |x, y| {
        let (u, v) = uv(x, y);
        let (dx, dy) = (u - cx, v - cy);
        let r = (dx * dx + dy * dy).sqrt() + wobble * (lobes * dy.atan2(dx)).sin();
        (radius - r) / softness + 0.5
    });
    let image = compose(&fg, &bg, &alpha).unwrap();
    Composite { fg, bg, alpha, image }
}

/// Adds uniform noise of half-width `amplitude` to the observed image.
pub fn with_noise(c: Composite, amplitude: f64, seed: u64) -> Composite {
    let mut rng = StdRng::seed_from_u64(seed);
    let (w, h) = c.image.dimensions();
    let noisy: Vec<f64> = c
        .image
        .data()
        .iter()
        .map(|v| v + rng.gen_range(-amplitude..=amplitude))
        .collect();
    let image = Image::from_fn(w, h, 3, |x, y, ch| noisy[ch * w * h + y * w + x]);
    Composite { image, ..c }
}

/// Uniformly random image, matte and composite.
pub fn random_instance(width: usize, height: usize, rng: &mut StdRng) -> (Image, AlphaMatte) {
    let image = Image::from_fn(width, height, 3, |_, _, _| rng.gen());
    let alpha = AlphaMatte::from_fn(width, height, |_, _| rng.gen());
    (image, alpha)
}

/// Gaussian elimination with partial pivoting on a dense copy.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
            .unwrap();
        a.swap(k, p);
        b.swap(k, p);
        let pivot = a[k][k];
        assert!(pivot != 0.0, "singular matrix");
        for i in k + 1..n {
            let m = a[i][k] / pivot;
            if m != 0.0 {
                for j in k..n {
                    a[i][j] -= m * a[k][j];
                }
                b[i] -= m * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

/// `Σ α_i Σ_c (compose(F,B,α) − I)²` over all pixels, divided by `Σ α_i`.
pub fn reconstruction_error(fg: &Image, bg: &Image, alpha: &AlphaMatte, image: &Image) -> f64 {
    let rec = compose(fg, bg, alpha).unwrap();
    let n = image.pixel_count();
    let a = alpha.data();
    let mut num = 0.0;
    for c in 0..3 {
        for i in 0..n {
            let d = rec.data()[c * n + i] - image.data()[c * n + i];
            num += a[i] * d * d;
        }
    }
    num / a.iter().sum::<f64>()
}

/// Largest `|F_est − F_gt|` over pixels with `α > threshold`.
pub fn max_fg_error(est: &Image, gt: &Image, alpha: &AlphaMatte, threshold: f64) -> f64 {
    let n = alpha.data().len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        if alpha.data()[i] > threshold {
            for c in 0..3 {
                worst = worst.max((est.data()[c * n + i] - gt.data()[c * n + i]).abs());
            }
        }
    }
    worst
}
