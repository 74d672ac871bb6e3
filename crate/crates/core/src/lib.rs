//! Particle laboratory for the Boltzmann-Enskog equation.
//!
//! The crate simulates the N-particle jump process behind the equation,
//! computes exact (shifted) Wasserstein-1 distances between empirical
//! measures, and checks conservation laws, coupling inequalities and
//! Gronwall-type stability bounds against simulated data.
//!
//! Module map:
//! - [`geometry`]: collision parameterization and angle re-alignment.
//! - [`kernels`]: cross-sections, angular measures, spatial rates.
//! - [`particles`]: ensembles, free transport and stochastic collisions.
//! - [`transport`]: discrete measures, W1 and shifted W1 with certificates.
//! - [`analysis`]: generator, weak/mild residuals, moments, majorants,
//!   stability experiments and inequality audits.

pub mod analysis;
pub mod csv;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod particles;
pub mod quadrature;
pub mod rng;
pub mod transport;
pub mod vector;

pub use error::{Error, Result};
pub use vector::Vector;
