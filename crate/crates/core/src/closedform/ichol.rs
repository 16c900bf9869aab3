//! Threshold-dropping incomplete Cholesky factorization, IC(τ).

use alloc::vec;
use alloc::vec::Vec;

use super::sparse::CsrMatrix;

const NONE: usize = usize::MAX;
const PIVOT_FLOOR: f64 = 1e-12;

/// Lower-triangular factor `L` with `P·A·Pᵀ ≈ L·Lᵀ`, stored by columns
/// with the diagonal first in each column.
#[derive(Debug, Clone)]
pub struct IncompleteCholesky {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    /// `perm[k]` is the original index placed at position `k`.
    perm: Vec<usize>,
}

/// The factorization met a non-positive pivot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakdown {
    pub column: usize,
    pub pivot: f64,
}

impl IncompleteCholesky {
    /// Left-looking factorization of `P·A·Pᵀ`.
    ///
    /// A computed entry `v` of column `k` in row `r` is dropped when
    /// `|v| < drop_tol · sqrt(a_rr · a_kk)`, which makes the threshold
    /// independent of the matrix scale. The diagonal is always kept.
    pub fn factor(a: &CsrMatrix, perm: Vec<usize>, drop_tol: f64) -> Result<Self, Breakdown> {
        let n = a.n_rows();
        debug_assert_eq!(perm.len(), n);
        let mut inv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }
        let diag: Vec<f64> = perm.iter().map(|&p| a.get(p, p)).collect();

        let mut col_ptr: Vec<usize> = Vec::with_capacity(n + 1);
        let mut row_idx: Vec<usize> = Vec::with_capacity(a.nnz());
        let mut values: Vec<f64> = Vec::with_capacity(a.nnz());
        col_ptr.push(0);

        let mut work = vec![0.0; n];
        let mut touched = vec![false; n];
        let mut pattern: Vec<usize> = Vec::new();
        // Columns j < k whose next unused entry lies in row k, as linked
        // lists threaded through `next`.
        let mut head = vec![NONE; n];
        let mut next = vec![NONE; n];
        let mut cursor = vec![0usize; n];
        let mut kept: Vec<(usize, f64)> = Vec::new();

        for k in 0..n {
            for (c, v) in a.row(perm[k]) {
                let r = inv[c];
                if r >= k {
                    work[r] = v;
                    touched[r] = true;
                    pattern.push(r);
                }
            }

            let mut j = head[k];
            while j != NONE {
                let following = next[j];
                let p = cursor[j];
                let l_kj = values[p];
                for q in p..col_ptr[j + 1] {
                    let r = row_idx[q];
                    if !touched[r] {
                        touched[r] = true;
                        pattern.push(r);
                    }
                    work[r] -= values[q] * l_kj;
                }
                cursor[j] = p + 1;
                if p + 1 < col_ptr[j + 1] {
                    let r = row_idx[p + 1];
                    next[j] = head[r];
                    head[r] = j;
                }
                j = following;
            }

            let pivot = work[k];
            // A pivot lost to cancellation (e.g. the constant mode of a
            // pure Laplacian block) would blow up the triangular solves.
            if !(pivot > PIVOT_FLOOR * diag[k] && pivot.is_finite()) {
                return Err(Breakdown { column: k, pivot });
            }
            let l_kk = libm::sqrt(pivot);

            kept.clear();
            for &r in &pattern {
                if r != k {
                    let v = work[r];
                    if v.abs() >= drop_tol * libm::sqrt(diag[r] * diag[k]) {
                        kept.push((r, v / l_kk));
                    }
                }
                work[r] = 0.0;
                touched[r] = false;
            }
            pattern.clear();
            kept.sort_unstable_by_key(|&(r, _)| r);

            row_idx.push(k);
            values.push(l_kk);
            let first_off = row_idx.len();
            for &(r, v) in &kept {
                row_idx.push(r);
                values.push(v);
            }
            col_ptr.push(row_idx.len());

            cursor[k] = first_off;
            if first_off < row_idx.len() {
                let r = row_idx[first_off];
                next[k] = head[r];
                head[r] = k;
            }
        }

        Ok(Self {
            col_ptr,
            row_idx,
            values,
            perm,
        })
    }

    /// Number of stored entries of `L`, diagonal included.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `z = (Pᵀ·L·Lᵀ·P)⁻¹·r`, using `scratch` of length `n`.
    pub fn apply(&self, r: &[f64], z: &mut [f64], scratch: &mut [f64]) {
        let n = self.perm.len();
        for (k, &p) in self.perm.iter().enumerate() {
            scratch[k] = r[p];
        }
        // L·y = P·r
        for k in 0..n {
            let span = self.col_ptr[k]..self.col_ptr[k + 1];
            let yk = scratch[k] / self.values[span.start];
            scratch[k] = yk;
            for q in span.start + 1..span.end {
                scratch[self.row_idx[q]] -= self.values[q] * yk;
            }
        }
        // Lᵀ·w = y
        for k in (0..n).rev() {
            let span = self.col_ptr[k]..self.col_ptr[k + 1];
            let mut s = scratch[k];
            for q in span.start + 1..span.end {
                s -= self.values[q] * scratch[self.row_idx[q]];
            }
            scratch[k] = s / self.values[span.start];
        }
        for (k, &p) in self.perm.iter().enumerate() {
            z[p] = scratch[k];
        }
    }
}
