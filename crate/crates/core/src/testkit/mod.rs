//! Oracles and simulation drivers used by the test suites and examples.
//!
//! The oracles are deliberately naive and share no numerical code with the
//! estimation modules.

pub mod dgp;
pub mod harness;
pub mod oracle;

pub use dgp::DgpSpec;
pub use harness::{default_grid, run_coverage, CoverageConfig, CoverageReport, CoverageRow};
pub use oracle::{fd_derivative, fd_partial, fd_partial_steps, gauss_solve, oracle_ols, sorted_quantile, BruteForce, OlsOracle};
