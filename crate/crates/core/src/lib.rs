//! Solvers for linear evolution problems with a Caputo time derivative.

pub mod config;
pub mod contour;
pub mod elliptic;
pub mod error;
pub mod expr;
pub mod frac_calc;
pub mod kernels;
pub mod mittag_leffler;
pub mod problem;
pub mod propagators;
pub mod quadrature;
pub mod regularity;

pub use error::{Error, Result};
pub use num_complex::Complex64;
