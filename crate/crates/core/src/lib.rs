//! Stochastic domain decomposition with basis adaptation.
//!
//! Solves steady diffusion problems whose coefficient is a lognormal random
//! field with many stochastic dimensions. A cheap first-order chaos solve over
//! the whole domain identifies, for every spatial subdomain, a rotation of the
//! Gaussian germ whose leading directions carry most of the local solution
//! variance. Each subdomain is then re-solved by sparse-grid collocation in a
//! handful of rotated variables and the local statistics are stitched back
//! together.
//!
//! Module map:
//!
//! - [`mesh`]: structured grid, trapezoid weights, serpentine partition.
//! - [`random_field`]: squared-exponential kernel and discrete KL expansion.
//! - [`chaos`]: Hermite chaos basis, surrogates, moments and densities.
//! - [`sparse_grid`]: Gauss-Hermite Smolyak quadrature.
//! - [`diffusion`]: finite-volume solver for one coefficient realization.
//! - [`collocation`]: non-intrusive projection in the original germ.
//! - [`adapt`]: subdomain eigenproblem, isometry, reduced collocation, stitching.
//! - [`validation`]: Monte Carlo reference and error metrics.
//! - [`config`], [`commands`]: the benchmark driver behind the CLI.

pub mod adapt;
pub mod chaos;
pub mod collocation;
pub mod commands;
pub mod config;
pub mod diffusion;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod output;
pub mod random_field;
pub mod sampling;
pub mod sparse_grid;
pub mod validation;

pub use error::{Error, Result};
