//! Numerical laboratory for the limiting singular-value law of scaled powers
//! `n^{-m/2} X^m` of i.i.d. random matrices.
//!
//! The limit (a free Bessel law whose moments are the Fuss–Catalan numbers)
//! is computed three independent ways and cross-checked:
//!
//! * [`moments`]: exact integer moments, by closed form and by recurrence;
//! * [`stieltjes`] and [`density`]: the algebraic fixed-point equation for the
//!   Stieltjes transform, solved with branch tracking and inverted into a
//!   density and CDF;
//! * [`rmt_sim`] and [`analysis`]: Monte Carlo spectra of random matrix
//!   powers, compared to the limit by Kolmogorov distance, empirical moments
//!   and the residual of the fixed-point equation.
//!
//! [`cli`] drives everything from the `fusscat` binary and writes CSV.

pub mod analysis;
pub mod cli;
pub mod density;
pub mod error;
pub mod moments;
pub mod poly;
pub mod rmt_sim;
pub mod stieltjes;

pub use error::{Error, Result};
pub use num_complex::Complex64;
