//! Foreground and background color estimation for alpha matting.
//!
//! Given an observed image `I` and an alpha matte `α`, the crate recovers
//! per-pixel foreground `F` and background `B` colors such that
//! `I ≈ αF + (1 − α)B`. Two solvers are provided:
//!
//! * [`multilevel`]: a fast coarse-to-fine local solver that sweeps a
//!   2×2 per-pixel system over an image pyramid.
//! * [`closedform`]: the global quadratic formulation solved with
//!   preconditioned conjugate gradient, used as a reference.
//!
//! [`metrics`] and [`colorspace`] hold the evaluation machinery: alpha
//! weighted error measures and the sRGB / white-point pipeline used to
//! prepare ground truth.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// Index loops mirror the matrix notation; negated comparisons also reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod closedform;
pub mod colorspace;
mod error;
pub mod image;
pub mod metrics;
pub mod multilevel;

pub use closedform::{cf_foreground_background, CfParams};
pub use error::{Error, Result};
pub use image::{compose, compose_naive, AlphaMatte, Image, Resize};
pub use multilevel::{ml_foreground_background, MlParams};
