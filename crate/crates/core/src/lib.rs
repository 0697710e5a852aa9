//! Block-wise MAP inference for determinantal point processes whose kernel is
//! almost block diagonal, and a change-point detector built on it.
//!
//! The pieces, bottom up:
//!
//! - [`matrix`]: dense symmetric matrices, Cholesky, Schur complements and
//!   the smallest eigenvalue.
//! - [`kernel`]: DPP kernels, the quality/similarity construction, block
//!   partitions and a synthetic kernel generator.
//! - [`map`]: greedy and exhaustive MAP, and the block-wise driver.
//! - [`metrics`]: segment dissimilarities and sliding-window profiles.
//! - [`cpd`]: the detection pipeline and synthetic data generators.
//! - [`eval`]: scoring against ground truth and the MAP benchmark.
//! - [`io`]: CSV and JSON file formats.

pub mod cpd;
pub mod error;
pub mod eval;
pub mod io;
pub mod kernel;
pub mod map;
pub mod matrix;
pub mod metrics;
pub(crate) mod num;

pub use error::{Error, Result};
