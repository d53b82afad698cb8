//! Simulation of single-sideband time-modulated phased arrays driven by a
//! four-state (2-bit) phase staircase.
//!
//! Every element cycles through the phase states `0, π/2, π, 3π/2` once per
//! modulation period. With the windows arranged as a descending 90° staircase
//! the carrier and most harmonics cancel and the power lands in the −1st
//! harmonic, whose phase is set purely by the timing of the staircase. That
//! timing is what steers the harmonic beam.
//!
//! * [`waveform`]: the switching schedule and its evaluation.
//! * [`harmonics`]: Fourier coefficients, closed forms, the numeric oracle,
//!   insertion loss and Parseval bookkeeping.
//! * [`array`]: uniform linear array factor, steering synthesis, pattern cuts
//!   and beam metrics.
//! * [`nonideal`]: phase-state errors, clock quantization and Monte Carlo
//!   residual sideband statistics.

pub mod array;
pub mod error;
pub mod harmonics;
pub mod nonideal;
pub mod waveform;

pub use error::{Result, TmaError};
pub use num_complex::Complex64;
