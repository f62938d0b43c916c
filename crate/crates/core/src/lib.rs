//! Geometry of norm-regularized estimation.
//!
//! The crate covers the full pipeline for regularized M-estimators of the
//! form `argmin L(θ) + λ R(θ)` with an arbitrary norm `R`:
//!
//! * [`norms`]: L1, L2, L∞ and non-overlapping group norms with dual norms,
//!   subgradients, proximal maps and compatibility constants.
//! * [`randomdesign`]: sub-Gaussian design and noise generators, covariance
//!   square roots and restricted eigenvalues.
//! * [`geometry`]: restricted / constrained error sets, spherical cap samplers
//!   and Monte-Carlo Gaussian widths.
//! * [`losses`] and [`solver`]: squared, logistic and Poisson losses and an
//!   accelerated proximal gradient solver.
//! * [`conditions`]: empirical RE / RIP / RSC statistics and envelope fits.
//! * [`regparam`]: Monte-Carlo calibration of the regularization parameter.
//! * [`harness`]: end-to-end recovery trials and scaling fits.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. Parallelism is injected through the [`Executor`] trait so that
//! every Monte-Carlo loop produces identical output regardless of threading.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
mod exec;
mod prelude;
mod rng;

pub mod conditions;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod losses;
pub mod norms;
pub mod randomdesign;
pub mod regparam;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use linalg::Matrix;
pub use rng::{derive_seed, substream};
