//! Dense complex linear algebra, Bessel functions and FFT power spectra.

mod bessel;
mod eigen;
mod fft;
mod matrix;
mod scalar;

pub use bessel::{bessel_j, bessel_j01};
pub use eigen::{eig_hermitian, eigvals_hermitian, EigenDecomposition};
pub use fft::{fft_power, uniform_step, PowerSpectrum};
pub use matrix::{ComplexVector, HermitianMatrix, SparseHermitian};
pub use scalar::{cis, wrap_angle, Real};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("empty input")]
    Empty,
    #[error("expected {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("matrix is not Hermitian at ({row}, {col})")]
    NotHermitian { row: usize, col: usize },
    #[error("cannot normalise a zero vector")]
    ZeroNorm,
    #[error("QL iteration did not converge for eigenvalue {index}")]
    NoConvergence { index: usize },
    #[error("Bessel order {0} unsupported (only -1, 0, 1)")]
    UnsupportedOrder(i32),
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample spacing must be positive and finite")]
    BadStep,
    #[error("zero-pad factor must be at least 1")]
    BadPadFactor,
    #[error("time axis is not uniform at sample {index}")]
    NonUniform { index: usize },
}
