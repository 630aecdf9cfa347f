//! Free Klein-Gordon field toolkit.
//!
//! The crate is organised around the objects needed to compute vacuum
//! expectation values of the free scalar field and to sample its fixed-time
//! configuration-space densities:
//!
//! - [`kernels`]: Gaussian wave packets and the mass-shell inner products
//!   (quantum, classical thermal, and the ξ-scaled variant).
//! - [`opalgebra`]: the creation/annihilation *-algebra, normal ordering,
//!   vacuum expectation values, Wick pairings and an operator-string parser.
//! - [`spectra`]: spectral coefficients c(k) of the Gaussian densities.
//! - [`sampler`]: spectral-method lattice sampler and estimators.
//! - [`fockoracle`]: single-mode truncated number-basis cross-checks.
//! - [`verify`]: the aggregated self-check suite used by `kgf verify`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod constants;
pub mod error;
pub mod fockoracle;
pub mod kernels;
pub mod opalgebra;
pub mod sampler;
pub mod spectra;
pub mod verify;

mod format;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};
pub use format::fmt_f64;
pub use num_complex::Complex64;
