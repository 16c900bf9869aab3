//! Runtime scaling over a ladder of image sizes.

use std::io::Write;
use std::time::Instant;

use fgest_core::closedform::cf_solve;
use fgest_core::{ml_foreground_background, AlphaMatte, CfParams, Image, MlParams, Resize};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::args::{BenchArgs, Method};
use crate::commands::{same_size, write_csv};
use crate::error::{CliError, Result};
use crate::png;

/// Aggregate timing of one method at one size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub width: usize,
    pub height: usize,
    pub megapixels: f64,
    pub method: String,
    /// Mean over the repetitions.
    pub wall_time_s: f64,
    pub repetitions: usize,
    /// Sample standard deviation; 0 for a single repetition.
    pub time_stddev_s: f64,
    /// High-water resident set size, written as `unavailable` when the OS
    /// does not report it.
    #[serde(serialize_with = "ser_rss", deserialize_with = "de_rss")]
    pub peak_rss_bytes: Option<u64>,
}

const UNAVAILABLE: &str = "unavailable";

fn ser_rss<S: Serializer>(v: &Option<u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(b) => s.serialize_u64(*b),
        None => s.serialize_str(UNAVAILABLE),
    }
}

fn de_rss<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<u64>, D::Error> {
    let s = String::deserialize(d)?;
    if s == UNAVAILABLE {
        return Ok(None);
    }
    s.parse().map(Some).map_err(serde::de::Error::custom)
}

/// Size with about `megapixels` pixels and the aspect ratio of `w × h`.
pub fn scaled_size(w: usize, h: usize, megapixels: f64) -> (usize, usize) {
    let s = (megapixels * 1e6 / (w * h) as f64).sqrt();
    let side = |v: usize| ((v as f64 * s).round() as usize).max(1);
    (side(w), side(h))
}

/// Rough closed-form footprint. The matrix, its incomplete factor and the
/// CG work vectors all scale with the 2n unknowns; the constant is the
/// measured peak at one megapixel with some headroom.
pub fn closedform_bytes(width: usize, height: usize) -> u64 {
    const BYTES_PER_PIXEL: u64 = 1200;
    (width * height) as u64 * BYTES_PER_PIXEL
}

/// Resets the kernel's high-water mark so the next reading covers only
/// what follows. Best effort.
fn reset_peak_rss() {
    let _ = std::fs::write("/proc/self/clear_refs", "5");
}

fn peak_rss() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn mean_stddev(t: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let mean = t.iter().sum::<f64>() / n;
    if t.len() < 2 {
        return (mean, 0.0);
    }
    let var = t.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn time_once(method: Method, image: &Image, alpha: &AlphaMatte, ml: &MlParams, cf: &CfParams) -> Result<f64> {
    let start = Instant::now();
    match method {
        Method::Multilevel => {
            std::hint::black_box(ml_foreground_background(image, alpha, ml)?);
        }
        Method::Closedform => {
            std::hint::black_box(cf_solve(image, alpha, cf)?);
        }
    }
    Ok(start.elapsed().as_secs_f64())
}

pub fn bench(args: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    if let Some(s) = args.sizes.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(CliError::Usage(format!("--sizes must be positive, got {s}")));
    }
    let image = png::read_rgb(&args.image)?;
    let alpha = png::read_alpha(&args.matte.alpha, args.matte.alpha_source)?;
    same_size(
        ("image", &args.image, image.dimensions()),
        ("alpha", &args.matte.alpha, alpha.dimensions()),
    )?;
    let (ml, cf) = (MlParams::default(), CfParams::default());
    let limit = args.cf_memory_limit_mb * 1024 * 1024;
    let mut records = Vec::new();
    for &mp in &args.sizes {
        let (w, h) = scaled_size(image.width(), image.height(), mp);
        let img = image.resize(w, h)?;
        let a = alpha.resize(w, h)?;
        for &method in &args.methods {
            if method == Method::Closedform && closedform_bytes(w, h) > limit {
                writeln!(
                    out,
                    "skipped {} at {w}x{h}: estimated {} MB exceeds the {} MB guard",
                    method.name(),
                    closedform_bytes(w, h) / (1024 * 1024),
                    args.cf_memory_limit_mb
                )?;
                continue;
            }
            reset_peak_rss();
            let times = (0..args.reps)
                .map(|_| time_once(method, &img, &a, &ml, &cf))
                .collect::<Result<Vec<_>>>()?;
            let (mean, sd) = mean_stddev(&times);
            let record = BenchRecord {
                width: w,
                height: h,
                megapixels: (w * h) as f64 / 1e6,
                method: method.name().into(),
                wall_time_s: mean,
                repetitions: args.reps,
                time_stddev_s: sd,
                peak_rss_bytes: peak_rss(),
            };
            writeln!(
                out,
                "{:>10} {:>5}x{:<5} {:>8.4} MP  {:.4} s ± {:.4} s",
                record.method, w, h, record.megapixels, mean, sd
            )?;
            records.push(record);
        }
    }
    write_csv(&args.csv, &records)
}
