//! Spectral ranking from incomplete, noisy pairwise comparisons, with
//! optional item covariates.
//!
//! The crate is organised bottom-up:
//!
//! - [`data`] and [`metrics`]: comparison graphs, covariate tables, rankings,
//!   upsets and Kendall's tau.
//! - [`linalg`]: symmetric eigensolvers, Fiedler vectors, Cholesky with jitter
//!   and the generalised eigenproblem.
//! - [`kernels`] and [`bahsic`]: kernel matrices, HSIC, the permutation
//!   independence test and backward feature elimination.
//! - [`rankers`]: Serial-Rank, C-Serial-Rank, SVD-Rank (plain and degree
//!   normalised), SVDCov-Rank, SVDKCov-Rank, SVDKFair-Rank, KCCA-Rank and a
//!   rank-centrality baseline.
//! - [`predict`]: scoring unseen items from their covariates.
//! - [`synth`] and [`harness`]: the synthetic generator, noise models,
//!   cross-validation and experiment sweeps.
//! - [`io`]: CSV and JSON formats.

pub mod bahsic;
pub mod data;
pub mod error;
pub mod harness;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod metrics;
pub mod predict;
pub mod rankers;
pub mod synth;

pub use data::{ComparisonGraph, ComparisonKind, FeatureTable, Orientation, RankResult};
pub use error::{Error, ErrorClass, Result};
pub use kernels::KernelSpec;
pub use metrics::{count_upsets, kendall_tau, orient_ranking};
pub use rankers::{Algorithm, FittedModel, RankOutput, RankParams};

/// Dense matrix type used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense column vector type used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
