//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The generator handed to a matrix exponential is not Hermitian.
    #[error("non-Hermitian input: max |H - H^dag| = {defect:.3e} exceeds {tol:.3e}")]
    NonHermitianInput { defect: f64, tol: f64 },

    /// Matrix dimensions are outside 2..=8 or disagree between operands.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A matrix entry is NaN or infinite.
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    /// Pulse shape sampled outside the window [-t_c, t_c].
    #[error("time {t:.3e} s outside pulse window [-{t_c:.3e}, {t_c:.3e}] s")]
    OutOfWindow { t: f64, t_c: f64 },

    /// Qubit precession period is shorter than one pixel.
    #[error("precession period {period:.3e} s shorter than pixel {pixel:.3e} s")]
    PeriodTooShort { period: f64, pixel: f64 },

    /// Empty pulse sequence where at least one pixel is required.
    #[error("empty pulse sequence")]
    EmptySequence,

    /// A model or GA parameter violates its invariant.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Genomes of unequal length handed to crossover.
    #[error("genome length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },

    /// Sweep gate time is not an integer multiple of the pixel.
    #[error("gate time {gate_time:.6e} s is not an integer multiple of pixel {pixel:.6e} s")]
    NonIntegerPixelCount { gate_time: f64, pixel: f64 },

    /// Malformed database, sequence, or config file.
    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
