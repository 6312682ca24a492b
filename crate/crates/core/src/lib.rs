//! Simulation library for joint MMSE equalization and LDPC decoding over
//! two-dimensional intersymbol-interference channels.
//!
//! The crate is organized around five subsystems:
//!
//! * [`grid`] — symbol pages, point spread functions, the 2D convolution
//!   channel with AWGN, and SNR/noise conversions.
//! * [`ldpc`] — regular LDPC coset codes and flooding sum-product decoding.
//! * [`equalizer`] — soft-in soft-out linear MMSE equalization with priors
//!   (exact per-bit filters, two time-invariant approximations, and a hybrid
//!   switcher).
//! * [`turbo`] — the iterative equalizer/decoder loop and BER measurement.
//! * [`analysis`] — EXIT charts, mutual-information instruments, and
//!   Gaussian-approximation density evolution with threshold bisection.
//!
//! All stochastic operations take explicit seeds and are bit-reproducible
//! regardless of worker count.

pub mod analysis;
pub mod equalizer;
pub mod error;
pub mod grid;
pub mod ldpc;
pub mod llr;
pub mod oracle;
pub mod seed;
pub mod turbo;

pub use error::CoreError;
pub use grid::{NoiseSpec, PsfKernel, ReceivedPage, SymbolPage};
pub use llr::{LlrGrid, LLR_CLIP};

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
