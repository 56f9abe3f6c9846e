//! Numerical toolkit for Fourier analysis in spaces of dominating mixed smoothness.

pub mod error;
pub mod experiments;
pub mod fourier;
pub mod grid;
pub mod partition;
pub mod spaces;
pub mod wavelet;
pub mod witnesses;

pub use error::{Error, Result};
pub use grid::{Grid, SampledFunction, Side};
