//! Numerical toolkit for Denjoy-Carleman weight sequences: associated functions, growth
//! conditions, regularized weights, entire multipliers with tube bounds, grid Fourier
//! calculus, the short-time Fourier transform and an explicit convolution factorization.

pub mod diag;
pub mod error;
pub mod factorizer;
pub mod grid;
pub mod multiplier;
pub mod quad;
pub mod regularize;
pub mod stft;
pub mod weights;

pub use diag::Warning;
pub use error::{Error, Result};
