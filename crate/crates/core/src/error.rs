use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two rasters that must agree in size do not.
    DimensionMismatch {
        operand: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    ChannelMismatch {
        operand: &'static str,
        expected: usize,
        found: usize,
    },
    /// Zero width/height or a buffer whose length does not match its shape.
    InvalidShape {
        width: usize,
        height: usize,
        channels: usize,
        len: usize,
    },
    /// A stored value is NaN or outside `[0, 1]`.
    ValueOutOfRange {
        index: usize,
        value: f64,
    },
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    /// A 2×2 per-pixel system whose determinant is not safely positive.
    SingularSystem {
        determinant: f64,
    },
    /// Conjugate gradient ran out of iterations. Carries the best iterate
    /// seen, in the system's `[F; B]` unknown layout.
    NotConverged {
        channel: usize,
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },
    /// The least-squares normal matrix `VᵀV` has rank below 3.
    RankDeficient {
        rank: usize,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                operand,
                expected,
                found,
            } => write!(
                f,
                "dimension mismatch: {operand} is {}x{}, expected {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            Error::ChannelMismatch {
                operand,
                expected,
                found,
            } => write!(
                f,
                "channel mismatch: {operand} has {found} channels, expected {expected}"
            ),
            Error::InvalidShape {
                width,
                height,
                channels,
                len,
            } => write!(
                f,
                "invalid raster shape {width}x{height}x{channels} for buffer of length {len}"
            ),
            Error::ValueOutOfRange { index, value } => {
                write!(f, "value {value} at index {index} is outside [0, 1]")
            }
            Error::InvalidParameter { name, reason } => {
                write!(f, "invalid parameter `{name}`: {reason}")
            }
            Error::SingularSystem { determinant } => {
                write!(f, "per-pixel system is singular (determinant {determinant:e})")
            }
            Error::NotConverged {
                channel,
                iterations,
                residual,
                ..
            } => write!(
                f,
                "conjugate gradient did not converge on channel {channel} after {iterations} \
                 iterations (relative residual {residual:e})"
            ),
            Error::RankDeficient { rank } => write!(
                f,
                "source colors are rank deficient (rank {rank} < 3); white point fit is undetermined"
            ),
        }
    }
}

impl core::error::Error for Error {}
