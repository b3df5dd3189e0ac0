//! Numerical laboratory for recovering a semilinear term F(t,x,u) in a
//! parabolic equation from lateral Dirichlet-to-Neumann data with zero
//! initial condition.
//!
//! The crate provides, in dependency order:
//!
//! - [`grid`]: space-time discretization of (0,T) x Omega with boundary
//!   bookkeeping and second-order stencils;
//! - [`nonlinearity`]: semilinear terms with derivatives, builtin families
//!   and sampled hypothesis checks;
//! - [`boundary`]: the normalized cutoff excitation and admissible boundary
//!   perturbations under a discrete Hölder-norm surrogate;
//! - [`solver`]: implicit time steppers for the semilinear problem (Newton
//!   per step) and for linear problems with potential and source, including
//!   a positivity-guaranteed solve;
//! - [`linearize`]: the first/second linearization cascade in the boundary
//!   amplitude and its derivative-verification harness;
//! - [`dnmap`]: Dirichlet-to-Neumann traces and discrepancy-norm estimation;
//! - [`reachable`]: the reachable-set constants a1/a2 and the monotone
//!   inversion of s = v_lambda(t,x);
//! - [`reconstruct`]: rebuilding F on the reachable set from tabulated
//!   potentials;
//! - [`stability`]: the empirical log-stability trend harness;
//! - [`config`] and [`report`]: scenario configuration, orchestration and
//!   file outputs behind the `parinv` command-line front end.
//!
//! See the crate examples for one runnable program per capability.

pub mod boundary;
pub mod config;
pub mod dnmap;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod linearize;
pub mod nonlinearity;
pub mod reachable;
pub mod reconstruct;
pub mod report;
pub mod solver;
pub mod stability;

pub use error::{Error, Result};
