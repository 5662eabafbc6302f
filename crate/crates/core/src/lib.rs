//! Partitioning-based least squares regression.
//!
//! Nonparametric series regression on tensor-product partitions of the
//! covariate support, with B-spline and piecewise-polynomial bases,
//! IMSE-optimal selection of the number of subintervals, three bias
//! corrections, heteroskedasticity-consistent standard errors and uniform
//! confidence bands obtained by simulating the supremum of a Gaussian
//! approximation.
//!
//! # Modules
//!
//! - [`grid`]: samples, partitions, cell lookup
//! - [`basis`]: basis evaluation with derivatives, error kernels
//! - [`estimator`]: design matrices, least squares fits, prediction
//! - [`tuning`]: rule-of-thumb and direct plug-in selection of `kappa`
//! - [`inference`]: bias corrections, standard errors, intervals, bands
//! - [`lincom`]: linear combinations of group regression functions
//! - [`pipeline`]: end-to-end estimation on an evaluation grid
//! - [`cli`]: CSV-in / JSON-out command-line front end
//! - [`testkit`]: independent oracles and Monte Carlo drivers

pub mod basis;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod inference;
pub mod lincom;
mod linalg;
pub mod pipeline;
pub mod testkit;
pub mod tuning;

pub use basis::{basis_dim, eval_bspline, eval_piecewise, BasisFamily, BasisSpec};
pub use error::{Error, Result};
pub use estimator::{build_design, fit_ls, predict, Design, Fit};
pub use grid::{locate_cell, make_partition, Partition, Sample, Spacing};
