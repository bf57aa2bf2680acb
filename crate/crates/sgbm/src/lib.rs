//! Stochastic Grid Bundling Method for decoupled forward-backward SDEs.
//!
//! Simulate a forward path cloud once, then recurse backward in time:
//! at each step, bundle paths by a sort key, run bundle-local regress-later
//! least squares of the later-time `Y`, `Z` and driver values onto a basis
//! with known one-step conditional expectations, and reconstruct the earlier
//! values analytically from the fitted coefficients. A theta-scheme with a
//! Picard loop covers explicit, implicit and Crank-Nicolson time stepping,
//! and a Euclidean-norm guard on the regression coefficients rejects unstable
//! runs. The crate also ships the benchmark experiment harness behind the
//! `sgbm` command-line binary.

pub mod basis;
pub mod bundling;
pub mod cases;
pub mod cloud;
pub mod config;
pub mod error;
pub mod grid;
pub mod model;
pub mod oracle;
pub mod problems;
pub mod regression;
pub mod report;
pub mod solver;

pub use basis::{cond_expect, BasisSpec, CondExpectation};
pub use bundling::{make_bundles, BundleAssignment, SortKey};
pub use cloud::{simulate_cloud, PathCloud};
pub use error::{Result, SgbmError};
pub use grid::TimeGrid;
pub use model::{cholesky, Dynamics, ForwardModel, GbmParams};
pub use regression::{check_acceptance, regress_bundle};
pub use solver::{solve, BsdeProblem, SchemeConfig, SolverResult};
