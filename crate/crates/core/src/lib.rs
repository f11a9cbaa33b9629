//! Expected numbers of critical points of Gaussian random holomorphic
//! sections of `O(N)` over `CP^m`, computed three ways: closed forms,
//! Monte Carlo over the real Wishart ensemble, and direct simulation of the
//! random section itself.
//!
//! Module map:
//!
//! * [`mp`]: Marchenko-Pastur law (ratio 1), its tail quantile, the
//!   top-eigenvalue rate function and the logarithmic potential.
//! * [`wishart`]: sampling and exact laws of the `(m+1) x m` real Wishart
//!   ensemble with entry variance `1/m`.
//! * [`critstats`]: exact counts, asymptotic rates and Wishart Monte Carlo
//!   estimators of the expected critical-point counts.
//! * [`fieldsim`]: ground-truth simulation of the random section, critical
//!   point search and Morse index classification.
//! * [`verify`]: the end-to-end acceptance checks, shared by the test suite
//!   and the command-line `verify` subcommand.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x >= 0.0)` also rejects NaN

pub mod critstats;
pub mod error;
pub mod estimate;
pub mod fieldsim;
pub mod mp;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod tridiag;
pub mod verify;
pub mod wishart;

pub use error::{Error, Result};
pub use estimate::CountEstimate;
pub use rng::RngStream;
