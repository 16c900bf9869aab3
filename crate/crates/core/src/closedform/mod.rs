//! Global closed-form color estimation.
//!
//! Minimizes, independently per color channel,
//!
//! ```text
//! Σ_i (α_i F_i + (1 − α_i) B_i − I_i)²
//!   + Σ_i w^x_i [(F_{i_x})² + (B_{i_x})²] + w^y_i [(F_{i_y})² + (B_{i_y})²]
//! ```
//!
//! with forward differences `F_{i_x} = F_{(x+1,y)} − F_{(x,y)}` (absent on the
//! last column / row) and weights `w = |α_{i_x}| + ε_cf`. The small uniform
//! `ε_cf` keeps flat-`α` regions coupled. The normal equations are positive
//! definite unless `α` is constant over the whole image; then they are
//! singular but consistent, and conjugate gradient still converges.
//! The resulting `2n × 2n` system over `[F; B]` is solved with conjugate
//! gradient preconditioned by a threshold incomplete Cholesky factor.

mod ichol;
mod pcg;
mod sparse;

use alloc::vec;
use alloc::vec::Vec;

pub use ichol::{Breakdown, IncompleteCholesky};
pub use pcg::{pcg, CgFailure, CgReport, Preconditioner, PreconditionerKind};
pub use sparse::CsrMatrix;

use crate::error::{Error, Result};
use crate::image::{ensure_channels, ensure_dims, AlphaMatte, Image};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfParams {
    /// Added to every gradient weight.
    pub eps_cf: f64,
    /// Target relative residual `‖A·x − b‖₂ / ‖b‖₂`.
    pub residual_tol: f64,
    /// Iteration cap per channel; `None` means `10·n` for `n` pixels.
    pub max_iters: Option<usize>,
    /// Incomplete Cholesky drop threshold, relative to the geometric mean
    /// of the two diagonal entries an element couples.
    pub ic_drop_tol: f64,
    pub preconditioner: PreconditionerKind,
}

impl Default for CfParams {
    fn default() -> Self {
        Self {
            eps_cf: 1e-5,
            residual_tol: 1e-6,
            max_iters: None,
            ic_drop_tol: 1e-4,
            preconditioner: PreconditionerKind::IncompleteCholesky,
        }
    }
}

impl CfParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.eps_cf) {
            return Err(Error::InvalidParameter {
                name: "eps_cf",
                reason: "must be finite and positive",
            });
        }
        if !positive(self.residual_tol) {
            return Err(Error::InvalidParameter {
                name: "residual_tol",
                reason: "must be finite and positive",
            });
        }
        if !positive(self.ic_drop_tol) {
            return Err(Error::InvalidParameter {
                name: "ic_drop_tol",
                reason: "must be finite and positive",
            });
        }
        if self.max_iters == Some(0) {
            return Err(Error::InvalidParameter {
                name: "max_iters",
                reason: "must be at least 1",
            });
        }
        Ok(())
    }
}

/// Normal equations of the global cost for one image.
///
/// The unknown vector of channel `c` is `[F^c_0 … F^c_{n−1}, B^c_0 … B^c_{n−1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetricSystem {
    pub width: usize,
    pub height: usize,
    pub matrix: CsrMatrix,
    /// One right-hand side of length `2n` per color channel.
    pub rhs: Vec<Vec<f64>>,
}

impl SparseSymmetricSystem {
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}

/// Horizontal and vertical smoothness weights; `None` on the last column
/// (horizontal) or last row (vertical).
fn edge_weights(alpha: &AlphaMatte, eps_cf: f64) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = alpha.dimensions();
    let a = alpha.data();
    let mut wx = vec![0.0; w * h];
    let mut wy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                wx[i] = (a[i + 1] - a[i]).abs() + eps_cf;
            }
            if y + 1 < h {
                wy[i] = (a[i + w] - a[i]).abs() + eps_cf;
            }
        }
    }
    (wx, wy)
}

pub fn assemble_system(image: &Image, alpha: &AlphaMatte, params: &CfParams) -> Result<SparseSymmetricSystem> {
    params.validate()?;
    ensure_dims("image", image.dimensions(), alpha.dimensions())?;
    ensure_channels("image", image.channels(), 3)?;
    let (w, h) = alpha.dimensions();
    let n = w * h;
    let a = alpha.data();
    let (wx, wy) = edge_weights(alpha, params.eps_cf);

    // Neighbor coupling weights of pixel i in column order: up, left, right, down.
    let couplings = |i: usize| {
        let (x, y) = (i % w, i / w);
        [
            (y > 0).then(|| (i - w, wy[i - w])),
            (x > 0).then(|| (i - 1, wx[i - 1])),
            (x + 1 < w).then(|| (i + 1, wx[i])),
            (y + 1 < h).then(|| (i + w, wy[i])),
        ]
    };

    let rows = (0..2 * n).map(|row| {
        let (i, offset) = if row < n { (row, 0) } else { (row - n, n) };
        let (alpha_i, beta_i) = (a[i], 1.0 - a[i]);
        let data_diag = if offset == 0 {
            alpha_i * alpha_i
        } else {
            beta_i * beta_i
        };
        let cross = alpha_i * beta_i;
        let links = couplings(i);
        let smooth: f64 = links.iter().flatten().map(|&(_, wt)| wt).sum();

        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(6);
        if offset == n {
            entries.push((i, cross));
        }
        let (before, after) = links.split_at(2);
        entries.extend(before.iter().flatten().map(|&(j, wt)| (offset + j, -wt)));
        entries.push((offset + i, data_diag + smooth));
        entries.extend(after.iter().flatten().map(|&(j, wt)| (offset + j, -wt)));
        if offset == 0 {
            entries.push((n + i, cross));
        }
        entries
    });
    let matrix = CsrMatrix::from_sorted_rows(2 * n, rows);

    let rhs = (0..3)
        .map(|c| {
            let plane = image.plane(c);
            let mut b = Vec::with_capacity(2 * n);
            b.extend(plane.iter().zip(a).map(|(v, al)| al * v));
            b.extend(plane.iter().zip(a).map(|(v, al)| (1.0 - al) * v));
            b
        })
        .collect();

    Ok(SparseSymmetricSystem {
        width: w,
        height: h,
        matrix,
        rhs,
    })
}

/// Value of the global cost (including the `ε_cf` terms) for candidate
/// `F` and `B` given as planar 3-channel slices of length `3n`.
///
/// Evaluated directly from the definition, independent of the assembled
/// matrix.
pub fn cost(image: &Image, alpha: &AlphaMatte, fg: &[f64], bg: &[f64], eps_cf: f64) -> Result<f64> {
    ensure_dims("image", image.dimensions(), alpha.dimensions())?;
    ensure_channels("image", image.channels(), 3)?;
    let (w, h) = alpha.dimensions();
    let n = w * h;
    if fg.len() != 3 * n || bg.len() != 3 * n {
        return Err(Error::InvalidShape {
            width: w,
            height: h,
            channels: 3,
            len: fg.len().min(bg.len()),
        });
    }
    let a = alpha.data();
    let (wx, wy) = edge_weights(alpha, eps_cf);
    let mut total = 0.0;
    for c in 0..3 {
        let (f, b, img) = (&fg[c * n..(c + 1) * n], &bg[c * n..(c + 1) * n], image.plane(c));
        for i in 0..n {
            let r = a[i] * f[i] + (1.0 - a[i]) * b[i] - img[i];
            total += r * r;
            if i % w + 1 < w {
                let (df, db) = (f[i + 1] - f[i], b[i + 1] - b[i]);
                total += wx[i] * (df * df + db * db);
            }
            if i / w + 1 < h {
                let (df, db) = (f[i + w] - f[i], b[i + w] - b[i]);
                total += wy[i] * (df * df + db * db);
            }
        }
    }
    Ok(total)
}

/// Which preconditioner a solve actually used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PreconditionerUsed {
    IncompleteCholesky {
        factor_nnz: usize,
    },
    /// Diagonal preconditioner; `breakdown` is set when incomplete
    /// Cholesky was requested but hit a non-positive pivot.
    Jacobi {
        breakdown: Option<Breakdown>,
    },
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfSolution {
    pub fg: Image,
    pub bg: Image,
    /// Unclamped solution per channel in the `[F; B]` layout.
    pub raw: Vec<Vec<f64>>,
    pub reports: Vec<CgReport>,
    pub preconditioner: PreconditionerUsed,
}

impl CfSolution {
    pub fn iterations(&self) -> [usize; 3] {
        [0, 1, 2].map(|c| self.reports[c].iterations)
    }

    pub fn residuals(&self) -> [f64; 3] {
        [0, 1, 2].map(|c| self.reports[c].residual)
    }
}

/// Position `2i` holds `F_i` and `2i + 1` holds `B_i`, so each pixel's
/// tightly coupled pair is factored together.
fn interleaved(n: usize) -> Vec<usize> {
    (0..n).flat_map(|i| [i, n + i]).collect()
}

pub fn build_preconditioner(system: &SparseSymmetricSystem, params: &CfParams) -> (Preconditioner, PreconditionerUsed) {
    let m = &system.matrix;
    match params.preconditioner {
        PreconditionerKind::IncompleteCholesky => {
            match IncompleteCholesky::factor(m, interleaved(system.pixel_count()), params.ic_drop_tol) {
                Ok(ic) => {
                    let used = PreconditionerUsed::IncompleteCholesky { factor_nnz: ic.nnz() };
                    (Preconditioner::IncompleteCholesky(ic), used)
                }
                Err(b) => (
                    Preconditioner::jacobi(m),
                    PreconditionerUsed::Jacobi { breakdown: Some(b) },
                ),
            }
        }
        PreconditionerKind::Jacobi => (
            Preconditioner::jacobi(m),
            PreconditionerUsed::Jacobi { breakdown: None },
        ),
        PreconditionerKind::None => (Preconditioner::Identity, PreconditionerUsed::None),
    }
}

/// Solves all three channels with one shared preconditioner.
pub fn solve_pcg(system: &SparseSymmetricSystem, params: &CfParams) -> Result<CfSolution> {
    params.validate()?;
    let n = system.pixel_count();
    let max_iters = params.max_iters.unwrap_or(10 * n);
    let (pre, used) = build_preconditioner(system, params);

    let mut raw = Vec::with_capacity(3);
    let mut reports = Vec::with_capacity(3);
    for (channel, b) in system.rhs.iter().enumerate() {
        let mut x = vec![0.0; 2 * n];
        match pcg(&system.matrix, b, &mut x, &pre, params.residual_tol, max_iters) {
            Ok(report) => reports.push(report),
            Err(fail) => {
                return Err(Error::NotConverged {
                    channel,
                    iterations: fail.iterations,
                    residual: fail.residual,
                    best: x,
                })
            }
        }
        raw.push(x);
    }

    let mut fg = Vec::with_capacity(3 * n);
    let mut bg = Vec::with_capacity(3 * n);
    for x in &raw {
        fg.extend_from_slice(&x[..n]);
        bg.extend_from_slice(&x[n..]);
    }
    Ok(CfSolution {
        fg: Image::from_raw_clamped(system.width, system.height, 3, fg),
        bg: Image::from_raw_clamped(system.width, system.height, 3, bg),
        raw,
        reports,
        preconditioner: used,
    })
}

/// Assembles and solves, keeping solver diagnostics.
pub fn cf_solve(image: &Image, alpha: &AlphaMatte, params: &CfParams) -> Result<CfSolution> {
    let system = assemble_system(image, alpha, params)?;
    solve_pcg(&system, params)
}

pub fn cf_foreground_background(image: &Image, alpha: &AlphaMatte, params: &CfParams) -> Result<(Image, Image)> {
    cf_solve(image, alpha, params).map(|s| (s.fg, s.bg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_pixel_system_by_hand() {
        let image = Image::from_fn(2, 1, 3, |x, _, c| [[0.2, 0.4, 0.6], [0.9, 0.3, 0.1]][x][c]);
        let alpha = AlphaMatte::new(2, 1, vec![1.0, 0.0]).unwrap();
        let params = CfParams {
            eps_cf: 0.01,
            ..CfParams::default()
        };
        let sys = assemble_system(&image, &alpha, &params).unwrap();
        // Unknowns [F0, F1, B0, B1]; the single edge has weight |0 − 1| + 0.01.
        let expected = [
            [2.01, -1.01, 0.0, 0.0],
            [-1.01, 1.01, 0.0, 0.0],
            [0.0, 0.0, 1.01, -1.01],
            [0.0, 0.0, -1.01, 2.01],
        ];
        for r in 0..4 {
            for c in 0..4 {
                assert!((sys.matrix.get(r, c) - expected[r][c]).abs() < 1e-15, "({r},{c})");
            }
        }
        assert_eq!(sys.rhs[0], [0.2, 0.0, 0.0, 0.9]);
        assert_eq!(sys.rhs[2], [0.6, 0.0, 0.0, 0.1]);
    }

    #[test]
    fn constant_alpha_gives_uniform_weights() {
        let image = Image::filled(3, 3, 3, 0.5);
        let alpha = AlphaMatte::filled(3, 3, 0.3);
        let params = CfParams::default();
        let sys = assemble_system(&image, &alpha, &params).unwrap();
        let n = 9;
        for r in 0..2 * n {
            for (c, v) in sys.matrix.row(r) {
                if c != r && c + n != r && r + n != c {
                    assert_eq!(v, -params.eps_cf);
                }
            }
        }
    }

    #[test]
    fn rows_have_at_most_six_entries_and_matrix_is_symmetric() {
        let image = Image::from_fn(5, 4, 3, |x, y, c| ((x + y + c) % 3) as f64 / 2.0);
        let alpha = AlphaMatte::from_fn(5, 4, |x, y| ((x * y) % 5) as f64 / 4.0);
        let sys = assemble_system(&image, &alpha, &CfParams::default()).unwrap();
        assert!(sys.matrix.is_symmetric());
        for r in 0..sys.matrix.n_rows() {
            assert!(sys.matrix.row(r).count() <= 6);
        }
    }

    #[test]
    fn rejects_mismatch_and_bad_params() {
        let p = CfParams::default();
        assert!(assemble_system(&Image::filled(2, 2, 3, 0.0), &AlphaMatte::filled(3, 2, 0.0), &p).is_err());
        assert!(assemble_system(&Image::filled(2, 2, 1, 0.0), &AlphaMatte::filled(2, 2, 0.0), &p).is_err());
        let bad = CfParams { eps_cf: 0.0, ..p };
        assert!(assemble_system(&Image::filled(2, 2, 3, 0.0), &AlphaMatte::filled(2, 2, 0.0), &bad).is_err());
        assert!(CfParams {
            max_iters: Some(0),
            ..p
        }
        .validate()
        .is_err());
    }

    #[test]
    fn opaque_constant_image_is_recovered() {
        let image = Image::solid(12, 9, [0.2, 0.7, 0.4]);
        let alpha = AlphaMatte::filled(12, 9, 1.0);
        let (fg, _) = cf_foreground_background(&image, &alpha, &CfParams::default()).unwrap();
        let dev = fg
            .data()
            .iter()
            .zip(image.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-6, "{dev}");
    }

    #[test]
    fn identity_like_system_needs_few_iterations() {
        // α ≡ 1 makes the F block I + ε_cf·L. The B block is ε_cf·L alone,
        // singular but with a zero right-hand side, so CG never leaves its
        // range; incomplete Cholesky breaks down on it and Jacobi takes over.
        let image = Image::from_fn(8, 8, 3, |x, y, c| ((x + 2 * y + c) % 7) as f64 / 6.0);
        let alpha = AlphaMatte::filled(8, 8, 1.0);
        let sol = cf_solve(&image, &alpha, &CfParams::default()).unwrap();
        assert!(sol.iterations().iter().all(|&k| k <= 5), "{:?}", sol.iterations());
        assert!(matches!(
            sol.preconditioner,
            PreconditionerUsed::Jacobi { breakdown: Some(_) }
        ));
        assert!(sol.bg.data().iter().all(|&v| v == 0.0));
        let dev = sol
            .fg
            .data()
            .iter()
            .zip(image.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-3, "{dev}");
    }

    #[test]
    fn iteration_cap_reports_best_iterate() {
        let image = Image::from_fn(16, 16, 3, |x, y, c| ((x * 3 + y + c) % 5) as f64 / 4.0);
        let alpha = AlphaMatte::from_fn(16, 16, |x, _| x as f64 / 15.0);
        let params = CfParams {
            max_iters: Some(2),
            preconditioner: PreconditionerKind::None,
            ..CfParams::default()
        };
        match cf_solve(&image, &alpha, &params) {
            Err(Error::NotConverged {
                channel: 0,
                iterations: 2,
                residual,
                best,
            }) => {
                assert!(residual > 1e-6);
                assert_eq!(best.len(), 2 * 256);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
