//! Linear spectral statistics of families of overlapping sample covariance
//! matrices: reproducible ensemble simulation, limiting mean and covariance
//! formulas, and brute-force enumeration oracles for small sizes.
//!
//! The crate is organized in four layers:
//!
//! * [`rng_ensemble`] draws the common entry array and carves out the
//!   submatrix family; every entry is a pure function of (seed, row, column),
//!   so results are independent of evaluation order and thread count.
//! * [`spectra`] turns samples into eigenvalues and Monte Carlo moment
//!   estimates with batch-means standard errors.
//! * [`analytic`] evaluates the limiting covariance through three separate
//!   routes (mode sums, combinatorial series, contour quadrature), the field
//!   kernel, the limiting density, and Sobolev norms of test functions.
//! * [`oracle`] recomputes small cases by exhaustive enumeration over plane
//!   trees and entry-moment sums, with no shared code with the fast paths.

#![forbid(unsafe_code)]

pub mod analytic;
pub mod error;
pub mod oracle;
pub mod rng_ensemble;
pub mod spectra;

pub use error::{Error, Result};
