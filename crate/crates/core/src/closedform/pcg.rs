//! Preconditioned conjugate gradient for symmetric positive definite systems.

use alloc::vec;
use alloc::vec::Vec;

use super::ichol::IncompleteCholesky;
use super::sparse::CsrMatrix;

/// Which preconditioner to request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PreconditionerKind {
    /// Threshold incomplete Cholesky; falls back to Jacobi on breakdown.
    #[default]
    IncompleteCholesky,
    Jacobi,
    /// Plain conjugate gradient.
    None,
}

/// A ready-to-apply preconditioner `M⁻¹`.
#[derive(Debug, Clone)]
pub enum Preconditioner {
    IncompleteCholesky(IncompleteCholesky),
    /// Inverse diagonal.
    Jacobi(Vec<f64>),
    Identity,
}

impl Preconditioner {
    pub fn apply(&self, r: &[f64], z: &mut [f64], scratch: &mut [f64]) {
        match self {
            Preconditioner::IncompleteCholesky(ic) => ic.apply(r, z, scratch),
            Preconditioner::Jacobi(inv_diag) => {
                for ((z, r), d) in z.iter_mut().zip(r).zip(inv_diag) {
                    *z = r * d;
                }
            }
            Preconditioner::Identity => z.copy_from_slice(r),
        }
    }

    /// Inverse diagonal; rows with a non-positive diagonal (an all-zero
    /// data block) are left unscaled.
    pub fn jacobi(a: &CsrMatrix) -> Self {
        Preconditioner::Jacobi(
            a.diagonal()
                .into_iter()
                .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
                .collect(),
        )
    }
}

/// Outcome of one conjugate gradient solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    /// Final relative residual `‖b − A·x‖₂ / ‖b‖₂`, recomputed from `x`.
    pub residual: f64,
    /// `sqrt(rᵀ·M⁻¹·r)` before the first and after every iteration.
    pub preconditioned_norms: Vec<f64>,
}

/// Failure carrying the lowest-residual iterate, which is left in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct CgFailure {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

fn true_residual(a: &CsrMatrix, b: &[f64], x: &[f64], r: &mut [f64]) {
    a.mul_vec_into(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

/// Solves `A·x = b` starting from the contents of `x`, until the relative
/// residual drops below `tol`.
///
/// Convergence signalled by the recurrence residual is confirmed against
/// the explicitly recomputed residual; on disagreement the iteration
/// restarts from the current `x`.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    pre: &Preconditioner,
    tol: f64,
    max_iters: usize,
) -> Result<CgReport, CgFailure> {
    let n = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgReport {
            iterations: 0,
            residual: 0.0,
            preconditioned_norms: vec![0.0],
        });
    }

    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut best = x.to_vec();

    true_residual(a, b, x, &mut r);
    let mut best_residual = norm(&r) / b_norm;
    let mut iterations = 0;
    let mut norms = Vec::new();

    'restart: loop {
        pre.apply(&r, &mut z, &mut scratch);
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        norms.push(libm::sqrt(rz.max(0.0)));

        loop {
            let rel = norm(&r) / b_norm;
            if rel < tol {
                true_residual(a, b, x, &mut r);
                let actual = norm(&r) / b_norm;
                if actual < tol {
                    return Ok(CgReport {
                        iterations,
                        residual: actual,
                        preconditioned_norms: norms,
                    });
                }
                if iterations >= max_iters {
                    break 'restart;
                }
                continue 'restart;
            }
            if iterations >= max_iters {
                break 'restart;
            }

            a.mul_vec_into(&p, &mut q);
            let pq = dot(&p, &q);
            if !(pq > 0.0) {
                // Search direction lost A-positivity to rounding.
                true_residual(a, b, x, &mut r);
                if norm(&r) / b_norm < tol {
                    continue;
                }
                break 'restart;
            }
            let step = rz / pq;
            for i in 0..n {
                x[i] += step * p[i];
                r[i] -= step * q[i];
            }
            iterations += 1;

            let rel = norm(&r) / b_norm;
            if rel < best_residual {
                best_residual = rel;
                best.copy_from_slice(x);
            }

            pre.apply(&r, &mut z, &mut scratch);
            let rz_next = dot(&r, &z);
            norms.push(libm::sqrt(rz_next.max(0.0)));
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }

    x.copy_from_slice(&best);
    true_residual(a, b, x, &mut r);
    Err(CgFailure {
        iterations,
        residual: norm(&r) / b_norm,
    })
}
