use std::io::Write;
use std::path::Path;
use std::time::Instant;

use fgest_core::closedform::{cf_solve, PreconditionerUsed};
use fgest_core::colorspace::{prepare_ground_truth, GammaParams};
use fgest_core::metrics::{evaluate, GradParams};
use fgest_core::{compose, compose_naive, ml_foreground_background, AlphaMatte, CfParams, Image, MlParams};
use serde::{Deserialize, Serialize};

use crate::args::{ComposeArgs, EstimateArgs, Method, MetricsArgs, PrepArgs, SolverArgs};
use crate::error::{CliError, Result};
use crate::png;

/// Fails unless two inputs have the same size, naming both.
pub fn same_size(a: (&str, &Path, (usize, usize)), b: (&str, &Path, (usize, usize))) -> Result<()> {
    if a.2 == b.2 {
        return Ok(());
    }
    Err(CliError::Input(format!(
        "size mismatch: {} {} is {}x{} but {} {} is {}x{}",
        a.0,
        a.1.display(),
        a.2 .0,
        a.2 .1,
        b.0,
        b.1.display(),
        b.2 .0,
        b.2 .1
    )))
}

pub fn ml_params(args: &SolverArgs) -> Result<MlParams> {
    let mut p = MlParams::default();
    p.omega = args.omega.unwrap_or(p.omega);
    p.eps_r = args.eps_r.unwrap_or(p.eps_r);
    p.validate()?;
    Ok(p)
}

pub fn cf_params(args: &SolverArgs) -> Result<CfParams> {
    let mut p = CfParams::default();
    p.eps_cf = args.eps_cf.unwrap_or(p.eps_cf);
    p.residual_tol = args.residual_tol.unwrap_or(p.residual_tol);
    p.validate()?;
    Ok(p)
}

fn preconditioner_name(p: PreconditionerUsed) -> String {
    match p {
        PreconditionerUsed::IncompleteCholesky { factor_nnz } => {
            format!("incomplete-cholesky (factor nnz {factor_nnz})")
        }
        PreconditionerUsed::Jacobi { breakdown: None } => "jacobi".into(),
        PreconditionerUsed::Jacobi { breakdown: Some(b) } => {
            format!(
                "jacobi (incomplete cholesky broke down at column {}, pivot {:e})",
                b.column, b.pivot
            )
        }
        PreconditionerUsed::None => "none".into(),
    }
}

pub fn estimate(args: &EstimateArgs, out: &mut dyn Write) -> Result<()> {
    let (ml, cf) = (ml_params(&args.solver)?, cf_params(&args.solver)?);
    let image = png::read_rgb(&args.image)?;
    let alpha = png::read_alpha(&args.matte.alpha, args.matte.alpha_source)?;
    same_size(
        ("image", &args.image, image.dimensions()),
        ("alpha", &args.matte.alpha, alpha.dimensions()),
    )?;
    let (w, h) = image.dimensions();
    writeln!(out, "method: {}", args.method.name())?;
    writeln!(out, "size: {w}x{h}")?;
    let (fg, bg) = match args.method {
        Method::Multilevel => {
            let p = ml;
            writeln!(out, "omega: {}", p.omega)?;
            writeln!(out, "eps_r: {}", p.eps_r)?;
            writeln!(out, "iterations: {} low-res, {} high-res", p.iters_low, p.iters_high)?;
            let start = Instant::now();
            let result = ml_foreground_background(&image, &alpha, &p)?;
            writeln!(out, "wall_time_s: {:.6}", start.elapsed().as_secs_f64())?;
            result
        }
        Method::Closedform => {
            let p = cf;
            writeln!(out, "eps_cf: {}", p.eps_cf)?;
            writeln!(out, "residual_tol: {}", p.residual_tol)?;
            let start = Instant::now();
            let s = cf_solve(&image, &alpha, &p)?;
            writeln!(out, "wall_time_s: {:.6}", start.elapsed().as_secs_f64())?;
            writeln!(out, "preconditioner: {}", preconditioner_name(s.preconditioner))?;
            let [i0, i1, i2] = s.iterations();
            writeln!(out, "cg_iterations: {i0} {i1} {i2}")?;
            let [r0, r1, r2] = s.residuals();
            writeln!(out, "final_residuals: {r0:e} {r1:e} {r2:e}")?;
            (s.fg, s.bg)
        }
    };
    png::write_image(&args.out_fg, &fg, args.bit_depth)?;
    if let Some(path) = &args.out_bg {
        png::write_image(path, &bg, args.bit_depth)?;
    }
    Ok(())
}

fn parse_color(v: &[f64]) -> Result<[f64; 3]> {
    match v {
        &[r, g, b] if v.iter().all(|c| (0.0..=1.0).contains(c)) => Ok([r, g, b]),
        _ => Err(CliError::Usage(format!(
            "--bg-color needs three values in [0, 1], got {v:?}"
        ))),
    }
}

pub fn compose_cmd(args: &ComposeArgs, _out: &mut dyn Write) -> Result<()> {
    let (name, path) = match (&args.fg, &args.image) {
        (Some(p), _) => ("fg", p),
        (None, Some(p)) => ("image", p),
        (None, None) => return Err(CliError::Usage("one of --fg or --image is required".into())),
    };
    let front = png::read_rgb(path)?;
    let alpha = png::read_alpha(&args.matte.alpha, args.matte.alpha_source)?;
    same_size(
        (name, path, front.dimensions()),
        ("alpha", &args.matte.alpha, alpha.dimensions()),
    )?;
    let (w, h) = alpha.dimensions();
    let bg = match (&args.bg, &args.bg_color) {
        (Some(p), _) => {
            let bg = png::read_rgb(p)?;
            same_size(
                ("bg", p, bg.dimensions()),
                ("alpha", &args.matte.alpha, alpha.dimensions()),
            )?;
            bg
        }
        (None, Some(c)) => Image::solid(w, h, parse_color(c)?),
        (None, None) => return Err(CliError::Usage("one of --bg or --bg-color is required".into())),
    };
    let result = if args.naive {
        compose_naive(&front, &bg, &alpha)?
    } else {
        compose(&front, &bg, &alpha)?
    };
    png::write_image(&args.out, &result, args.bit_depth)
}

/// One `metrics` result, as written to CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub sad: f64,
    pub mse: f64,
    pub grad: f64,
    pub translucent_pixels: usize,
}

pub fn compute_metrics(est: &Image, gt: &Image, alpha: &AlphaMatte, sigma: Option<f64>) -> Result<MetricsRecord> {
    let params = sigma.map(GradParams::with_sigma).unwrap_or_default();
    params.validate()?;
    let r = evaluate(est, gt, alpha, &params)?;
    Ok(MetricsRecord {
        sad: r.sad,
        mse: r.mse,
        grad: r.grad,
        translucent_pixels: r.translucent_pixel_count,
    })
}

pub fn metrics_cmd(args: &MetricsArgs, out: &mut dyn Write) -> Result<()> {
    let est = png::read_rgb(&args.est)?;
    let gt = png::read_rgb(&args.gt)?;
    let alpha = png::read_alpha(&args.matte.alpha, args.matte.alpha_source)?;
    same_size(("est", &args.est, est.dimensions()), ("gt", &args.gt, gt.dimensions()))?;
    same_size(
        ("gt", &args.gt, gt.dimensions()),
        ("alpha", &args.matte.alpha, alpha.dimensions()),
    )?;
    let r = compute_metrics(&est, &gt, &alpha, args.sigma)?;
    writeln!(out, "SAD: {}", r.sad)?;
    writeln!(out, "MSE: {}", r.mse)?;
    writeln!(out, "GRAD: {}", r.grad)?;
    writeln!(out, "translucent pixels: {}", r.translucent_pixels)?;
    if let Some(path) = &args.csv {
        write_csv(path, &[r])?;
    }
    Ok(())
}

pub fn prep_dataset(args: &PrepArgs, out: &mut dyn Write) -> Result<()> {
    let fg = png::read_rgb(&args.fg_linear)?;
    let img = png::read_rgb(&args.img_linear)?;
    let srgb = png::read_rgb(&args.img_srgb)?;
    same_size(
        ("fg-linear", &args.fg_linear, fg.dimensions()),
        ("img-linear", &args.img_linear, img.dimensions()),
    )?;
    same_size(
        ("img-linear", &args.img_linear, img.dimensions()),
        ("img-srgb", &args.img_srgb, srgb.dimensions()),
    )?;
    let mut params = GammaParams::default();
    params.gamma = args.gamma.unwrap_or(params.gamma);
    let gt = prepare_ground_truth(&fg, &img, &srgb, &params)?;
    writeln!(out, "gamma: {}", params.gamma)?;
    writeln!(out, "white point matrix:")?;
    for row in gt.fit.matrix {
        writeln!(out, "  {:>14.9} {:>14.9} {:>14.9}", row[0], row[1], row[2])?;
    }
    writeln!(out, "residual: {:e}", gt.fit.residual)?;
    png::write_image(&args.out_fg, &gt.fg_gt, args.bit_depth)?;
    png::write_image(&args.out_img, &gt.img_input, args.bit_depth)
}

pub fn write_csv<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err)
}
