//! Periodic eigenvalue problems `(d^2 + d A1 + A0 - lambda B0) U = 0` on one period,
//! solved three ways: Hill's method, 2-modified Fredholm determinants of truncated
//! Birman-Schwinger operators, and Gardner's periodic Evans function.

pub mod bridge;
pub mod error;
pub mod evans;
pub mod fourier;
pub mod fredholm;
pub mod hill;
pub mod locator;
pub mod logdet;
pub mod ode;
pub mod problem;
pub mod region;

pub use num_complex::Complex64;

pub use error::{Error, ErrorKind, Result};
pub use fourier::{CMatrix, FourierSeries};
pub use logdet::LogDet;
pub use problem::SpectralProblem;
pub use region::{Contour, Region};
